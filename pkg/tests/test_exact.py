import pickle
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from givental.exact import (
    I,
    ONE,
    ZERO,
    GaussRational,
    Mat2,
    MatrixSeries,
    series_exp,
    series_log,
    series_mul,
    star_adjoint,
    symplectic_residual,
)

fractions = st.builds(Fraction, st.integers(-60, 60), st.integers(1, 12))
small = st.builds(GaussRational, st.builds(Fraction, st.integers(-3, 3), st.integers(1, 3)),
                  st.builds(Fraction, st.integers(-3, 3), st.integers(1, 3)))
gaussians = st.builds(GaussRational, fractions, fractions)
mats = st.builds(lambda a, b, c, d: Mat2([[a, b], [c, d]]), gaussians, gaussians, gaussians, gaussians)
small_mats = st.builds(lambda a, b, c, d: Mat2([[a, b], [c, d]]), small, small, small, small)


def nilpotent_series(order, draw_mats):
    return MatrixSeries([Mat2.zero()] + draw_mats, order)


class TestGaussRational:
    def test_i_squared(self):
        assert I * I == -1
        assert (I * I).is_real()

    def test_inverse(self):
        x = GaussRational(Fraction(1, 2), Fraction(-3, 4))
        assert x * x.inverse() == ONE
        with pytest.raises(ZeroDivisionError):
            ZERO.inverse()

    @pytest.mark.parametrize("text, value", [
        ("3/8*i", GaussRational(0, Fraction(3, 8))),
        ("-1/2*i", GaussRational(0, Fraction(-1, 2))),
        ("1/2-3/4*i", GaussRational(Fraction(1, 2), Fraction(-3, 4))),
        ("-i", GaussRational(0, -1)),
        ("7", GaussRational(7)),
    ])
    def test_parse_and_print(self, text, value):
        assert GaussRational.parse(text) == value
        assert str(value) == text

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            GaussRational.parse("1/2+x")

    def test_norm_is_squared_magnitude(self):
        assert GaussRational(3, 4).norm() == 25

    def test_immutable_and_picklable(self):
        x = GaussRational(1, 2)
        with pytest.raises(AttributeError):
            x.re = 5
        assert pickle.loads(pickle.dumps(x)) == x

    @given(gaussians, gaussians, gaussians)
    def test_field_axioms(self, a, b, c):
        assert (a + b) * c == a * c + b * c
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        if b:
            assert (a / b) * b == a

    @given(gaussians)
    def test_string_roundtrip(self, a):
        assert GaussRational.parse(str(a)) == a

    @given(gaussians)
    def test_conjugate(self, a):
        assert (a * a.conjugate()).is_real()
        assert (a * a.conjugate()).re == a.norm()


class TestMat2:
    def test_index_convention(self):
        m = Mat2([[1, 2], [3, 4]])
        # upper index selects the row, lower index the column
        assert m.upper(1, 2) == 3
        assert m.upper(2, 1) == 2

    @given(mats, mats, mats)
    def test_ring_axioms(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a * b).transpose() == b.transpose() * a.transpose()

    @given(mats)
    def test_json_roundtrip(self, m):
        assert Mat2.from_json(m.to_json()) == m


class TestSeries:
    def test_log_of_identity_is_zero(self):
        assert series_log(MatrixSeries.identity(6)).is_zero()

    def test_log_rejects_bad_constant(self):
        with pytest.raises(ValueError):
            series_log(MatrixSeries.zero(3))

    def test_exp_rejects_bad_constant(self):
        with pytest.raises(ValueError):
            series_exp(MatrixSeries.identity(3))

    def test_exp_of_scalar_line(self):
        # exp(a z) has coefficients a^n / n!
        a = Mat2.identity() * 3
        e = series_exp(MatrixSeries([Mat2.zero(), a], 5))
        assert e[4] == Mat2.identity() * Fraction(81, 24)

    def test_mixed_orders_truncate(self):
        a = MatrixSeries.identity(3)
        b = MatrixSeries.identity(5)
        assert (a + b).order == 3
        assert series_mul(a, b).order == 3

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 6), st.lists(small_mats, min_size=1, max_size=6))
    def test_log_exp_roundtrip(self, order, ms):
        x = nilpotent_series(order, ms)
        assert series_log(series_exp(x)) == x
        y = series_exp(x)
        assert series_exp(series_log(y)) == y

    def test_star_adjoint_signs(self):
        m = Mat2([[1, 2], [3, 4]])
        s = MatrixSeries([m, m, m], 2)
        adj = star_adjoint(s)
        assert adj[0] == m.transpose()
        assert adj[1] == -m.transpose()
        assert adj[2] == m.transpose()

    def test_symplectic_residual_of_exp_of_antisymmetric(self):
        # exp of an infinitesimally symplectic series lies in the group
        r1 = Mat2([[1, 2], [2, -1]])  # odd power: symmetric
        r2 = Mat2([[0, 5], [-5, 0]])  # even power: antisymmetric
        r = MatrixSeries([Mat2.zero(), r1, r2], 8)
        assert (star_adjoint(r) + r).is_zero()
        assert symplectic_residual(series_exp(r)).is_zero()
