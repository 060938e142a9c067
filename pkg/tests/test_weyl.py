import itertools
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import symplectic_endos
from givental.p1 import compute_r
from givental.weyl import (
    DarbouxPolynomial,
    FockOperator,
    LaurentEndo,
    cocycle,
    cocycle_formula,
    construct_r_hat,
    construct_s_hat,
    hamiltonian_of,
    is_infinitesimal_symplectic,
    omega,
    op_commutator,
    op_compose,
    p,
    poisson_bracket,
    q,
    quantize,
)

F = Fraction
P = DarbouxPolynomial


def poly(*items):
    """``poly((c, v1, v2), ...)`` -> sum of c * v1 * v2."""
    return P({tuple(vs): c for c, *vs in items})


def fock(*items):
    return FockOperator({(qs, ds, h): c for c, qs, ds, h in items})


class TestOmega:
    def test_examples(self):
        assert omega({0: [1]}, {-1: [1]}) == 1
        assert omega({0: [1]}, {0: [1]}) == 0
        assert omega({1: [1]}, {-2: [1]}) == -1

    @given(st.dictionaries(st.integers(-3, 3), st.lists(st.integers(-4, 4), min_size=2, max_size=2), max_size=3),
           st.dictionaries(st.integers(-3, 3), st.lists(st.integers(-4, 4), min_size=2, max_size=2), max_size=3))
    def test_antisymmetry(self, f, g):
        assert omega(f, g) == -omega(g, f)

    @pytest.mark.parametrize("i, k, j, l", list(itertools.product(range(2), range(3), range(2), range(3))))
    def test_darboux_basis(self, i, k, j, l):
        # the vectors dual to p^i_k and q^j_l
        e = lambda a: [1 if b == a else 0 for b in range(2)]  # noqa: E731
        pvec = {-k - 1: [(-1) ** (k + 1) * x for x in e(i)]}
        qvec = {l: e(j)}
        assert omega(pvec, qvec) == (1 if (i, k) == (j, l) else 0)
        assert omega(qvec, {l: e(j)}) == 0

    def test_metric(self):
        g = [[0, 1], [1, 0]]
        assert omega({0: [1, 0]}, {-1: [0, 1]}, metric=g) == 1


class TestSymplectic:
    def test_examples(self):
        assert is_infinitesimal_symplectic(LaurentEndo.scalar(-1))
        assert not is_infinitesimal_symplectic(LaurentEndo.scalar(0))
        assert is_infinitesimal_symplectic(LaurentEndo.monomial(0, [[0, 1], [-1, 0]]))

    def test_p1_r_is_symplectic(self):
        r = LaurentEndo({l: compute_r(l, 4).matrix.rows() for l in range(1, 5)})
        assert is_infinitesimal_symplectic(r)


class TestHamiltonian:
    def test_multiplication_by_inverse_z(self):
        H = hamiltonian_of(LaurentEndo.scalar(-1), 3)
        expected = poly((F(-1, 2), q(0, 0), q(0, 0)), (-1, q(0, 1), p(0, 0)), (-1, q(0, 2), p(0, 1)),
                        (-1, q(0, 3), p(0, 2)))
        assert H == expected
        assert H.truncated

    def test_zero(self):
        H = hamiltonian_of(LaurentEndo({}, dim=2), 3)
        assert H == P() and not H.truncated

    def test_rejects_non_symplectic(self):
        with pytest.raises(ValueError):
            hamiltonian_of(LaurentEndo.scalar(0), 2)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.integers(-3, 3), min_size=3, max_size=3))
    def test_lower_triangular_display(self, entries):
        # Hamiltonian of s_1 z^-1 is minus the quadratic form
        # sum (s_1)_ij q^j_{1+n} p^i_n + 1/2 (s_1)_ij q^i_0 q^j_0
        a, b, c = entries
        s1 = [[a, b], [b, c]]
        K = 3
        H = hamiltonian_of(LaurentEndo.monomial(-1, s1), K)
        display = P()
        for i, j in itertools.product(range(2), repeat=2):
            for n in range(K):
                display = display + poly((s1[i][j], q(j, n + 1), p(i, n)))
            display = display + poly((F(s1[i][j], 2), q(i, 0), q(j, 0)))
        assert H == -display

    def test_degree(self):
        H = hamiltonian_of(LaurentEndo.monomial(2, [[0, 1], [-1, 0]]), 4)
        assert H.degree() == 2


class TestQuantize:
    def test_table(self):
        assert quantize(poly((1, q(0, 1), q(0, 1)))) == fock((1, ((0, 1), (0, 1)), (), -1))
        assert quantize(poly((1, p(0, 1), q(0, 2)))) == fock((1, ((0, 2),), ((0, 1),), 0))
        assert quantize(poly((1, p(1, 0), p(0, 2)))) == fock((1, (), ((1, 0), (0, 2)), 1))

    def test_example_operator(self):
        op = quantize(hamiltonian_of(LaurentEndo.scalar(-1), 5))
        expected = fock((F(-1, 2), ((0, 0), (0, 0)), (), -1),
                        *[(-1, ((0, m + 1),), ((0, m),), 0) for m in range(5)])
        assert op == expected
        assert op.hbar_powers() == {-1, 0}

    def test_rejects(self):
        with pytest.raises(ValueError):
            quantize(poly((1, q(0, 1))))
        with pytest.raises(ValueError):
            quantize(poly((1, q(0, 1), q(0, 1), p(0, 1))))

    @given(st.integers(-5, 5), st.integers(-5, 5))
    def test_linear(self, a, b):
        P1 = poly((1, q(0, 1), p(1, 0)), (2, q(0, 0), q(1, 1)))
        P2 = poly((3, p(0, 0), p(0, 1)), (1, q(1, 2), p(1, 2)))
        assert quantize(P1.scale(a) + P2.scale(b)) == quantize(P1).scale(a) + quantize(P2).scale(b)


class TestOperators:
    def test_canonical_commutation(self):
        d, x = FockOperator.derivation(0, 1), FockOperator.multiplication(0, 1)
        assert op_commutator(d, x) == FockOperator.identity()
        assert op_commutator(d, FockOperator.multiplication(0, 2)) == FockOperator()

    def test_compose_normal_orders(self):
        d = FockOperator.derivation(0, 0)
        x = FockOperator.multiplication(0, 0)
        # d d x x = x x d d + 4 x d + 2
        dd_xx = op_compose(op_compose(d, d), op_compose(x, x))
        expected = fock((1, ((0, 0), (0, 0)), ((0, 0), (0, 0)), 0), (4, ((0, 0),), ((0, 0),), 0), (2, (), (), 0))
        assert dd_xx == expected

    def test_associative(self):
        a = fock((1, ((0, 1),), ((0, 0),), 0), (2, (), ((0, 1), (0, 1)), 1))
        b = fock((3, ((0, 0), (0, 1)), (), -1))
        c = fock((1, ((0, 0),), ((0, 1),), 0))
        assert op_compose(op_compose(a, b), c) == op_compose(a, op_compose(b, c))

    def test_json_roundtrip(self):
        op = quantize(hamiltonian_of(LaurentEndo.scalar(-1), 3))
        assert FockOperator.from_json(op.to_json()) == op
        assert op.to_json()[0] == {"q": [[0, 0], [0, 0]], "d": [], "hbar": -1, "coeff": "-1/2"}


class TestCocycle:
    def test_coinciding(self):
        c = cocycle(poly((1, p(0, 1), p(0, 1))), poly((1, q(0, 1), q(0, 1))))
        assert c.is_scalar() and c.scalar_value() == 2

    def test_distinct(self):
        c = cocycle(poly((1, p(0, 1), p(1, 2))), poly((1, q(0, 1), q(1, 2))))
        assert c.scalar_value() == 1
        c = cocycle(poly((1, q(0, 1), q(1, 2))), poly((1, p(0, 1), p(1, 2))))
        assert c.scalar_value() == -1

    def test_vanishes_for_mixed(self):
        assert not cocycle(poly((1, p(0, 1), q(0, 1))), poly((1, q(0, 1), q(0, 1))))
        assert not cocycle(poly((1, p(0, 1), p(0, 2))), poly((1, q(0, 1), q(0, 1))))

    def test_grid_single_component(self):
        vs = [v(0, k) for v in (p, q) for k in range(3)]
        monos = [poly((1, a, b)) for a, b in itertools.combinations_with_replacement(vs, 2)]
        for P1, P2 in itertools.product(monos, repeat=2):
            c = cocycle(P1, P2)
            assert c.is_scalar()
            assert c.scalar_value() == cocycle_formula(P1, P2)


class TestPoisson:
    def test_examples(self):
        assert poisson_bracket(poly((1, q(0, 0))), poly((1, q(0, 1)))) == P()
        assert poisson_bracket(P.var(p(0, 1)), P.var(q(0, 1))) == 1
        assert poisson_bracket(P.var(q(0, 1)), P.var(p(0, 1))) == -1

    @settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.data())
    def test_lie_homomorphism(self, data):
        n = data.draw(st.integers(1, 2))
        A1 = data.draw(symplectic_endos(dim=n))
        A2 = data.draw(symplectic_endos(dim=n))
        K = 3
        wide = K + A1.window() + A2.window() + 1
        lhs = hamiltonian_of(A1.bracket(A2), K)
        rhs = poisson_bracket(hamiltonian_of(A1, wide), hamiltonian_of(A2, wide)).restrict(K)
        assert lhs == rhs


class TestTriangularGenerators:
    def test_s_example(self):
        s = LaurentEndo.scalar(-1)
        assert construct_s_hat(s, 5) == -quantize(hamiltonian_of(s, 5))

    def test_r_p1(self):
        r1 = compute_r(1).matrix
        op = construct_r_hat(LaurentEndo.monomial(1, r1.rows()), 3)
        expected = {}
        for i, j in itertools.product(range(2), repeat=2):
            for n in range(3):
                expected[(((j, n),), ((i, n + 1),), 0)] = r1[i, j]
            expected[((), tuple(sorted([(i, 0), (j, 0)])), 1)] = \
                expected.get(((), tuple(sorted([(i, 0), (j, 0)])), 1), 0) + r1[i, j] * F(-1, 2)
        assert op == FockOperator(expected)
        assert op.hbar_powers() == {0, 1}

    @settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.data())
    def test_s_cross_check(self, data):
        s = data.draw(symplectic_endos(powers=st.integers(-3, -1)))
        assert construct_s_hat(s, 4) == -quantize(hamiltonian_of(s, 4))

    @settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.data())
    def test_r_cross_check(self, data):
        r = data.draw(symplectic_endos(powers=st.integers(1, 3)))
        assert construct_r_hat(r, 4) == -quantize(hamiltonian_of(r, 4))

    def test_wrong_support(self):
        with pytest.raises(ValueError):
            construct_s_hat(LaurentEndo.scalar(1), 3)
        with pytest.raises(ValueError):
            construct_r_hat(LaurentEndo.scalar(-1), 3)
        with pytest.raises(ValueError):
            construct_r_hat(LaurentEndo.scalar(2), 3)  # even power needs antisymmetry
