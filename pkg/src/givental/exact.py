"""Exact scalars and truncated 2x2 matrix power series.

Everything here is built on :class:`fractions.Fraction`; nothing is ever
rounded.  Scalars are Gaussian rationals ``a + b*i``, matrices are 2x2 over
those scalars, and :class:`MatrixSeries` is a power series in ``z`` cut off
at an explicit order.
"""

from __future__ import annotations

import logging
import re
from fractions import Fraction
from math import factorial
from typing import Iterable, Sequence, Union

log = logging.getLogger(__name__)

Number = Union[int, Fraction, "GaussRational"]

_SCALAR_RE = re.compile(
    r"""^\s*
    (?:(?P<re>[+-]?\d+(?:/\d+)?)(?=\s*(?:[+-]|$)))?   # real part
    \s*
    (?:(?P<im>[+-]?\s*(?:\d+(?:/\d+)?)?)\s*\*?\s*i)?  # imaginary part
    \s*$""",
    re.VERBOSE,
)


_set = object.__setattr__
_F0 = Fraction(0)


def _gr(re: Fraction, im: Fraction) -> "GaussRational":
    # trusted constructor: both parts already Fractions
    g = object.__new__(GaussRational)
    _set(g, "re", re)
    _set(g, "im", im)
    return g


def _fadd(a: Fraction, b: Fraction) -> Fraction:
    # Fraction addition is slow; most parts in practice are zero
    if not a:
        return b
    if not b:
        return a
    return a + b


class GaussRational:
    """Exact element ``re + im*i`` of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re: int | Fraction | str = 0, im: int | Fraction = 0):
        _set(self, "re", re if type(re) is Fraction else Fraction(re))
        _set(self, "im", im if type(im) is Fraction else Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussRational is immutable")

    def __reduce__(self):
        return (GaussRational, (self.re, self.im))

    @classmethod
    def coerce(cls, x: Number) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        if isinstance(x, str):
            return cls.parse(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to GaussRational")

    @classmethod
    def parse(cls, text: str) -> "GaussRational":
        """Inverse of ``str``: accepts ``"p/q"``, ``"r/s*i"`` and ``"p/q+r/s*i"``."""
        m = _SCALAR_RE.match(text)
        if not m or (m.group("re") is None and m.group("im") is None):
            raise ValueError(f"not a Gaussian rational: {text!r}")
        re_part = Fraction(m.group("re")) if m.group("re") else Fraction(0)
        im_text = m.group("im")
        if im_text is None:
            im_part = Fraction(0)
        else:
            im_text = im_text.replace(" ", "")
            if im_text in ("", "+"):
                im_part = Fraction(1)
            elif im_text == "-":
                im_part = Fraction(-1)
            else:
                im_part = Fraction(im_text)
        return cls(re_part, im_part)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if type(other) is GaussRational:
            return _gr(_fadd(self.re, other.re), _fadd(self.im, other.im))
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return _gr(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return _gr(-self.re, -self.im)

    def __sub__(self, other):
        if type(other) is GaussRational:
            return _gr(_fadd(self.re, -other.re) if other.re else self.re,
                       _fadd(self.im, -other.im) if other.im else self.im)
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return _gr(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRational.coerce(other) - self

    def __mul__(self, other):
        if type(other) is GaussRational:
            o = other
        elif isinstance(other, (int, Fraction)):
            if not self.im:
                return _gr(self.re * other, _F0)
            return GaussRational(self.re * other, self.im * other)
        else:
            try:
                o = GaussRational.coerce(other)
            except TypeError:
                return NotImplemented
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return _gr(a * c, _F0)
        if not a and not c:
            return _gr(-(b * d), _F0)
        return _gr(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return GaussRational(self.re / other, self.im / other)
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return GaussRational.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = GaussRational(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def inverse(self) -> "GaussRational":
        norm = self.norm()
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        return GaussRational(self.re / norm, -self.im / norm)

    def conjugate(self) -> "GaussRational":
        return GaussRational(self.re, -self.im)

    def norm(self) -> Fraction:
        """Squared magnitude ``re**2 + im**2``."""
        return self.re * self.re + self.im * self.im

    # -- predicates ---------------------------------------------------------

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return self.im == 0

    def is_imaginary(self) -> bool:
        """True for pure imaginary values (zero counts as both)."""
        return self.re == 0

    def __eq__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __float__(self):
        if self.im:
            raise TypeError("non-real Gaussian rational has no float value")
        return float(self.re)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRational({str(self)!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        im = "" if abs(self.im) == 1 else f"{abs(self.im)}*"
        if self.re == 0:
            return f"{'-' if self.im < 0 else ''}{im}i"
        return f"{self.re}{'-' if self.im < 0 else '+'}{im}i"


I = GaussRational(0, 1)
ZERO = GaussRational(0)
ONE = GaussRational(1)


def gauss(x: Number) -> GaussRational:
    return GaussRational.coerce(x)


class Mat2:
    """Immutable 2x2 matrix over Q(i), stored row-major.

    ``m[row, col]`` is the plain layout.  :meth:`upper` reads the
    super/subscript notation ``(M)_i^j`` used for the R-matrix, which is
    ``m[j-1, i-1]`` (upper index selects the row).
    """

    __slots__ = ("_e",)

    def __init__(self, rows: Sequence[Sequence[Number]]):
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("Mat2 needs a 2x2 array")
        object.__setattr__(
            self, "_e", tuple(gauss(x) for r in rows for x in r)
        )

    def __setattr__(self, name, value):
        raise AttributeError("Mat2 is immutable")

    def __reduce__(self):
        return (Mat2, (self.rows(),))

    @classmethod
    def _raw(cls, entries: tuple) -> "Mat2":
        m = object.__new__(cls)
        object.__setattr__(m, "_e", entries)
        return m

    @classmethod
    def identity(cls) -> "Mat2":
        return cls._raw((ONE, ZERO, ZERO, ONE))

    @classmethod
    def zero(cls) -> "Mat2":
        return cls._raw((ZERO,) * 4)

    def __getitem__(self, rc: tuple[int, int]) -> GaussRational:
        r, c = rc
        return self._e[2 * r + c]

    def upper(self, lower: int, upper: int) -> GaussRational:
        """Entry ``(M)_lower^upper`` with 1-based indices."""
        return self[upper - 1, lower - 1]

    def rows(self) -> tuple[tuple[GaussRational, ...], ...]:
        e = self._e
        return ((e[0], e[1]), (e[2], e[3]))

    def entries(self) -> tuple[GaussRational, ...]:
        return self._e

    def __add__(self, other: "Mat2") -> "Mat2":
        return Mat2._raw(tuple(a + b for a, b in zip(self._e, other._e)))

    def __sub__(self, other: "Mat2") -> "Mat2":
        return Mat2._raw(tuple(a - b for a, b in zip(self._e, other._e)))

    def __neg__(self) -> "Mat2":
        return Mat2._raw(tuple(-a for a in self._e))

    def __mul__(self, other):
        if isinstance(other, Mat2):
            a, b, c, d = self._e
            e, f, g, h = other._e
            return Mat2._raw((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h))
        if isinstance(other, (int, Fraction, GaussRational)):
            return Mat2._raw(tuple(x * other for x in self._e))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, GaussRational)):
            return Mat2._raw(tuple(other * x for x in self._e))
        return NotImplemented

    def __truediv__(self, other):
        return Mat2._raw(tuple(x / other for x in self._e))

    def transpose(self) -> "Mat2":
        a, b, c, d = self._e
        return Mat2._raw((a, c, b, d))

    def is_zero(self) -> bool:
        return not any(self._e)

    def __eq__(self, other):
        if not isinstance(other, Mat2):
            return NotImplemented
        return self._e == other._e

    def __hash__(self):
        return hash(self._e)

    def __repr__(self):
        return f"Mat2({self.to_json()!r})"

    def to_json(self) -> list[list[str]]:
        """Row-major nested list of scalar strings."""
        return [[str(x) for x in row] for row in self.rows()]

    @classmethod
    def from_json(cls, rows: Sequence[Sequence[str]]) -> "Mat2":
        return cls([[GaussRational.parse(str(x)) for x in r] for r in rows])


class MatrixSeries:
    """Truncated power series ``sum_{n<=L} A_n z^n`` with Mat2 coefficients.

    Binary operations on series of different orders return a series of the
    smaller order.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Iterable[Mat2], order: int):
        if order < 0:
            raise ValueError("truncation order must be non-negative")
        cs = list(coeffs)
        if len(cs) > order + 1:
            cs = cs[: order + 1]
        cs.extend(Mat2.zero() for _ in range(order + 1 - len(cs)))
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "order", order)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixSeries is immutable")

    def __reduce__(self):
        return (MatrixSeries, (self.coeffs, self.order))

    @classmethod
    def identity(cls, order: int) -> "MatrixSeries":
        return cls([Mat2.identity()], order)

    @classmethod
    def zero(cls, order: int) -> "MatrixSeries":
        return cls([], order)

    def __getitem__(self, n: int) -> Mat2:
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def _common(self, other: "MatrixSeries") -> int:
        L = min(self.order, other.order)
        if self.order != other.order:
            log.debug("mixed truncation orders %d/%d, result truncated to %d",
                      self.order, other.order, L)
        return L

    def __add__(self, other: "MatrixSeries") -> "MatrixSeries":
        L = self._common(other)
        return MatrixSeries((self[n] + other[n] for n in range(L + 1)), L)

    def __sub__(self, other: "MatrixSeries") -> "MatrixSeries":
        L = self._common(other)
        return MatrixSeries((self[n] - other[n] for n in range(L + 1)), L)

    def __neg__(self) -> "MatrixSeries":
        return MatrixSeries((-c for c in self.coeffs), self.order)

    def scale(self, x: Number) -> "MatrixSeries":
        return MatrixSeries((c * x for c in self.coeffs), self.order)

    def __mul__(self, other):
        if isinstance(other, MatrixSeries):
            return series_mul(self, other)
        return self.scale(other)

    def truncate(self, order: int) -> "MatrixSeries":
        return MatrixSeries(self.coeffs, min(order, self.order))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def valuation(self) -> int | None:
        for n, c in enumerate(self.coeffs):
            if not c.is_zero():
                return n
        return None

    def __eq__(self, other):
        if not isinstance(other, MatrixSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.order, self.coeffs))

    def __repr__(self):
        return f"MatrixSeries(order={self.order}, coeffs={[c.to_json() for c in self.coeffs]})"


def series_mul(a: MatrixSeries, b: MatrixSeries) -> MatrixSeries:
    """Cauchy product truncated at ``min(a.order, b.order)``."""
    L = a._common(b)
    nz_a = [(n, c) for n, c in enumerate(a.coeffs[: L + 1]) if not c.is_zero()]
    nz_b = [(n, c) for n, c in enumerate(b.coeffs[: L + 1]) if not c.is_zero()]
    out = [Mat2.zero() for _ in range(L + 1)]
    for i, x in nz_a:
        for j, y in nz_b:
            if i + j > L:
                break
            out[i + j] = out[i + j] + x * y
    return MatrixSeries(out, L)


def series_log(s: MatrixSeries) -> MatrixSeries:
    """Logarithm ``sum_{m>=1} (-1)^(m-1) (s - I)^m / m`` of a series with s(0) = I."""
    if s[0] != Mat2.identity():
        raise ValueError("series_log needs constant term equal to the identity")
    L = s.order
    x = s - MatrixSeries.identity(L)
    out = MatrixSeries.zero(L)
    power = x
    # x has valuation >= 1, so x^m vanishes below z^m
    for m in range(1, L + 1):
        out = out + power.scale(Fraction((-1) ** (m - 1), m))
        power = series_mul(power, x)
    return out


def series_exp(s: MatrixSeries) -> MatrixSeries:
    """``sum_n s^n / n!``; s must have zero constant term."""
    if not s[0].is_zero():
        raise ValueError("series_exp needs zero constant term")
    L = s.order
    out = MatrixSeries.identity(L)
    power = MatrixSeries.identity(L)
    for n in range(1, L + 1):
        power = series_mul(power, s)
        out = out + power.scale(Fraction(1, factorial(n)))
    return out


def star_adjoint(s: MatrixSeries) -> MatrixSeries:
    """``s*(-z)``: transpose each coefficient and flip the sign of odd powers."""
    return MatrixSeries(
        (c.transpose() if n % 2 == 0 else -c.transpose() for n, c in enumerate(s.coeffs)),
        s.order,
    )


def symplectic_residual(s: MatrixSeries) -> MatrixSeries:
    """``s*(-z) s(z) - I``; vanishes iff s lies in the twisted loop group to order L."""
    return series_mul(star_adjoint(s), s) - MatrixSeries.identity(s.order)
