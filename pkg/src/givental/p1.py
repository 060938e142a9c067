"""The R-matrix of the projective line and its logarithm.

``R(z) = sum_n R_n z^n`` is stored through the coefficients of ``v^-n``
(``v = u1 - u2``); the power of ``v`` is always equal to ``n`` and is never
carried symbolically.  ``r(z) = log R(z)`` is computed exactly by
:func:`givental.exact.series_log` and, independently, by the explicit sum
over compositions in :func:`r_direct`.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial, prod

from .exact import I, Mat2, MatrixSeries, ZERO, series_log


def compute_c(n: int) -> Fraction:
    """``c_n = -prod_{k=1}^{n-1} (4k^2 - 1) / (2^(2n) n!)``; ``c_1 = -1/4``."""
    if n < 1:
        raise ValueError("c_n is defined for n >= 1 only")
    return -Fraction(prod(4 * k * k - 1 for k in range(1, n)), 4**n * factorial(n))


def compute_C_product(n: int) -> Fraction:
    """``C(n) = prod_{k=1}^{n-1} (1 - 1/(4k^2))``."""
    if n < 1:
        raise ValueError("C(n) is defined for n >= 1 only")
    return prod((1 - Fraction(1, 4 * k * k) for k in range(1, n)), start=Fraction(1))


@dataclass(frozen=True)
class RCoefficient:
    """Coefficient matrix of ``z^n v^-n`` in R(z)."""

    n: int
    matrix: Mat2


@lru_cache(maxsize=None)
def compute_R(n: int) -> RCoefficient:
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return RCoefficient(0, Mat2.identity())
    c = compute_c(n)
    sign = -1 if n % 2 == 0 else 1  # (-1)^(n-1)
    m = Mat2([
        [c, I * (2 * n * sign * c)],
        [I * (2 * n * c), -sign * c],
    ])
    return RCoefficient(n, m)


def R_series(order: int) -> MatrixSeries:
    return MatrixSeries((compute_R(n).matrix for n in range(order + 1)), order)


@lru_cache(maxsize=8)
def r_series(order: int) -> MatrixSeries:
    """``log R(z)`` truncated at ``z^order``."""
    return series_log(R_series(order))


ODD, EVEN = "odd", "even"


@dataclass(frozen=True)
class RlMatrix:
    """Coefficient ``r_l`` of ``z^l`` in log R(z) with its shape classification.

    ``shape`` is ``"odd"`` for ``[[a, b i], [b i, -a]]``, ``"even"`` for
    ``[[0, -c i], [c i, 0]]`` and ``None`` when neither pattern matches.
    """

    l: int
    matrix: Mat2
    shape: str | None

    @classmethod
    def classify(cls, l: int, m: Mat2) -> "RlMatrix":
        return cls(l, m, _shape_of(m))

    @property
    def a(self) -> Fraction | None:
        return self.matrix[0, 0].re if self.shape == ODD else None

    @property
    def b(self) -> Fraction | None:
        return self.matrix[0, 1].im if self.shape == ODD else None

    @property
    def c(self) -> Fraction | None:
        return self.matrix[1, 0].im if self.shape == EVEN else None

    def entries(self) -> dict[str, Fraction]:
        if self.shape == ODD:
            return {"a": self.a, "b": self.b}
        if self.shape == EVEN:
            return {"c": self.c}
        return {}

    def expected_parity(self) -> str:
        return ODD if self.l % 2 else EVEN


def _shape_of(m: Mat2) -> str | None:
    d0, d1 = m[0, 0], m[1, 1]
    o0, o1 = m[0, 1], m[1, 0]
    if not (o0.is_imaginary() and o1.is_imaginary()):
        return None
    if d0.is_real() and d1 == -d0 and o0 == o1:
        if not d0 and not o0:
            return None  # zero matrix, ambiguous
        return ODD
    if not d0 and not d1 and o0 == -o1:
        return EVEN
    return None


def compute_r(l: int, truncation: int | None = None) -> RlMatrix:
    if l < 1:
        raise ValueError("r_l is defined for l >= 1")
    truncation = l if truncation is None else truncation
    if l > truncation:
        raise ValueError(f"l={l} exceeds truncation order {truncation}")
    return RlMatrix.classify(l, r_series(truncation)[l])


def compositions(n: int, parts: int | None = None, minimum: int = 1):
    """Ordered tuples of integers ``>= minimum`` summing to n.

    With ``parts=None`` every length is produced (``minimum`` must be >= 1).
    """
    if parts is None:
        if minimum < 1:
            raise ValueError("unbounded length needs positive parts")
        for m in range(1, n // minimum + 1):
            yield from compositions(n, m, minimum)
        return
    if parts == 0:
        if n == 0:
            yield ()
        return
    shifted = n - parts * minimum
    if shifted < 0:
        return
    # stars and bars over the shifted total
    for cuts in combinations(range(shifted + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cuts:
            out.append(c - prev - 1 + minimum)
            prev = c
        out.append(shifted + parts - 2 - prev + minimum)
        yield tuple(out)


def _product(indices) -> Mat2:
    m = compute_R(indices[0]).matrix
    for i in indices[1:]:
        m = m * compute_R(i).matrix
    return m


def r_tail(l: int) -> Mat2:
    """``R'_l``: the terms of the composition sum with at least two factors."""
    total = Mat2.zero()
    for m in range(2, l + 1):
        acc = Mat2.zero()
        for comp in compositions(l, m):
            acc = acc + _product(comp)
        total = total + acc * Fraction((-1) ** (m - 1), m)
    return total


def r_direct(l: int) -> Mat2:
    """``r_l`` as ``sum_m (-1)^(m-1)/m sum_{i_1+..+i_m=l, i_j>0} R_{i_1}..R_{i_m}``."""
    return compute_R(l).matrix + r_tail(l)


# -- certification of the shape and non-vanishing of every r_l ----------------


@dataclass(frozen=True)
class LCheck:
    l: int
    shape: str | None
    shape_ok: bool
    nonzero: bool
    entries: dict

    @property
    def passed(self) -> bool:
        return self.shape_ok and self.nonzero

    def to_json(self) -> dict:
        return {
            "l": self.l,
            "shape": self.shape,
            "entries": {k: str(v) for k, v in self.entries.items()},
            "nonzero": self.nonzero,
        }


@dataclass(frozen=True)
class CertificationReport:
    max_l: int
    per_l: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.per_l)

    def failures(self) -> list[LCheck]:
        return [c for c in self.per_l if not c.passed]

    def to_json(self) -> dict:
        return {
            "max_l": self.max_l,
            "overall": "pass" if self.passed else "fail",
            "per_l": [c.to_json() for c in self.per_l],
        }


def check_rl(rl: RlMatrix) -> LCheck:
    shape_ok = rl.shape == rl.expected_parity()
    entries = rl.entries()
    nonzero = shape_ok and all(v != 0 for v in entries.values())
    return LCheck(rl.l, rl.shape, shape_ok, nonzero, entries)


def certify_nonvanishing(max_l: int, workers: int | None = None) -> CertificationReport:
    """Check by exact computation that every r_l, l <= max_l, has the
    parity shape with nonzero a_l, b_l (odd l) or c_l (even l)."""
    if max_l < 1:
        raise ValueError("max_l must be at least 1")
    series = r_series(max_l)
    rls = [RlMatrix.classify(l, series[l]) for l in range(1, max_l + 1)]
    if workers is None:
        workers = int(os.environ.get("ENGINE_THREADS", "1") or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            checks = list(pool.map(check_rl, rls))
    else:
        checks = [check_rl(rl) for rl in rls]
    return CertificationReport(max_l, checks)


# -- diagnostic: the recursion that defines R_n --------------------------------

CONVENTIONS = ("row_swap", "col_swap", "transpose_row_swap", "transpose_col_swap")


def _swap_rows(m: Mat2) -> Mat2:
    (a, b), (c, d) = m.rows()
    return Mat2([[c, d], [a, b]])


def _swap_cols(m: Mat2) -> Mat2:
    (a, b), (c, d) = m.rows()
    return Mat2([[b, a], [d, c]])


def recursion_residual(n: int, convention: str = "row_swap") -> Mat2:
    """Residual of the v^-n coefficient of the recursion for R_n.

    With ``R_{n-1} = A v^{-(n-1)}`` the recursion reads
    ``-(i/2) X(A) - (n-1) A = offdiag(A_n)`` where ``X`` rearranges the
    entries of ``A`` according to ``convention``.  Returns LHS - RHS with
    the closed form substituted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    a = compute_R(n - 1).matrix
    if convention == "row_swap":
        x = _swap_rows(a)
    elif convention == "col_swap":
        x = _swap_cols(a)
    elif convention == "transpose_row_swap":
        x = _swap_rows(a.transpose())
    else:
        x = _swap_cols(a.transpose())
    lhs = x * (I * Fraction(-1, 2)) - a * (n - 1)
    an = compute_R(n).matrix
    rhs = Mat2([[ZERO, an[0, 1]], [an[1, 0], ZERO]])
    return lhs - rhs


def recursion_lhs(n: int, convention: str = "row_swap") -> Mat2:
    an = compute_R(n).matrix
    return recursion_residual(n, convention) + Mat2([[ZERO, an[0, 1]], [an[1, 0], ZERO]])
