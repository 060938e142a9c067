"""Finite-range verification of the inequalities behind the non-vanishing of r_l.

All comparisons are exact.  Entries of R_n are pure real or pure imaginary,
so ``|x| < y`` is decided as ``x.norm() < y**2``.  Decimal constants enter
as exact rationals (0.62 -> 62/100, 0.477 -> 477/1000, 0.13 -> 13/100).

A :class:`BoundReport` carries the worst relative margin over the range it
checked: ``(rhs - lhs) / rhs`` on squared magnitudes for ``|x| <= y``-type
bounds, and the analogous quantity for lower bounds.  Strict inequalities
pass iff the margin is positive; non-strict ones also pass at margin 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .exact import Mat2
from .p1 import compositions, compute_C_product, compute_R, r_tail

C_THRESHOLD = Fraction(62, 100)
T_THRESHOLD = Fraction(477, 1000)
DIAG_PAIR_CONST = Fraction(15, 256)
DIAG_LOWER_CONST = Fraction(13, 100)
SIGMA_RATIO = Fraction(8, 3)


@dataclass(frozen=True)
class BoundReport:
    lemma: str
    statement: str
    checked: str
    margin: Fraction | None
    strict: bool = True
    witness: str = ""

    @property
    def passed(self) -> bool:
        if self.margin is None:
            return False
        return self.margin > 0 if self.strict else self.margin >= 0

    def to_json(self) -> dict:
        return {
            "lemma": self.lemma,
            "statement": self.statement,
            "checked": self.checked,
            "margin": None if self.margin is None else str(self.margin),
            "strict": self.strict,
            "passed": self.passed,
            "witness": self.witness,
        }


def _upper_margin(lhs: Fraction, rhs: Fraction) -> Fraction:
    # relative slack of lhs <= rhs, both non-negative
    return (rhs - lhs) / rhs if rhs else -lhs


def _lower_margin(lhs: Fraction, rhs: Fraction) -> Fraction:
    # relative slack of lhs >= rhs
    return (lhs - rhs) / lhs if lhs else -rhs


class _Worst:
    def __init__(self):
        self.margin = None
        self.witness = ""

    def add(self, margin: Fraction, witness: str):
        if self.margin is None or margin < self.margin:
            self.margin, self.witness = margin, witness


# -- sigma --------------------------------------------------------------------


@lru_cache(maxsize=None)
def sigma(n: int, l: int) -> int:
    """Sum over compositions of n into l non-negative parts of prod(i_j!).

    Computed by the first-part recursion; see :func:`sigma_bruteforce` for
    the enumeration.
    """
    if n < 0 or l < 1:
        raise ValueError("sigma needs n >= 0 and l >= 1")
    if l == 1:
        return factorial(n)
    return sum(factorial(j) * sigma(n - j, l - 1) for j in range(n + 1))


def sigma_bruteforce(n: int, l: int) -> int:
    total = 0
    for comp in compositions(n, l, minimum=0):
        p = 1
        for i in comp:
            p *= factorial(i)
        total += p
    return total


# -- S(m), T(m) --------------------------------------------------------------


def compute_S(m: int) -> Fraction:
    """``S(m) = sum_{k=3}^m 2^(k-3) (m-k)! / k``."""
    if m < 5:
        raise ValueError("S(m) is defined for m >= 5")
    return sum((Fraction(2 ** (k - 3) * factorial(m - k), k) for k in range(3, m + 1)), Fraction(0))


def compute_T(m: int) -> Fraction:
    return compute_S(m) / factorial(m - 3)


# -- individual lemmas ------------------------------------------------------


def check_C_decreasing(N: int) -> BoundReport:
    w = _Worst()
    for n in range(1, N + 1):
        a, b = compute_C_product(n), compute_C_product(n + 1)
        w.add((a - b) / a, f"n={n}")
    return BoundReport("C_decreasing", "C(n+1) < C(n)", f"1 <= n <= {N}", w.margin, True, w.witness)


def check_C_threshold(N: int) -> BoundReport:
    w = _Worst()
    for n in range(1, N + 1):
        w.add(_lower_margin(compute_C_product(n), C_THRESHOLD), f"n={n}")
    return BoundReport("C_threshold", "C(n) > 62/100", f"1 <= n <= {N}", w.margin, True, w.witness)


def _R_entry_norm(n: int, lower: int, upper: int) -> Fraction:
    return compute_R(n).matrix.upper(lower, upper).norm()


def check_R_entry_bounds(N: int) -> list[BoundReport]:
    """Two-sided bounds on |(R_n)_1^2| and |(R_n)_1^1| for 1 <= n <= N."""
    reports = []
    for lower, upper, denom, name, slug in (
        (1, 2, lambda n: 2, "(R_n)_1^2", "R_offdiag"),
        (1, 1, lambda n: 4 * n, "(R_n)_1^1", "R_diag"),
    ):
        lo, hi = _Worst(), _Worst()
        for n in range(1, N + 1):
            x2 = _R_entry_norm(n, lower, upper)
            cap = Fraction(factorial(n - 1), denom(n))
            lo.add(_lower_margin(x2, (C_THRESHOLD * cap) ** 2), f"n={n}")
            hi.add(_upper_margin(x2, cap**2), f"n={n}")
        d = "2" if upper == 2 else "4n"
        reports.append(BoundReport(f"{slug}_lower", f"0.62 (n-1)!/{d} < |{name}|", f"1 <= n <= {N}",
                                   lo.margin, True, lo.witness))
        reports.append(BoundReport(f"{slug}_upper", f"|{name}| <= (n-1)!/{d}", f"1 <= n <= {N}",
                                   hi.margin, False, hi.witness))
    return reports


def check_sigma(N: int) -> BoundReport:
    top = min(N, 12)
    w = _Worst()
    for n in range(0, top + 1):
        for l in range(1, top + 1):
            bound = SIGMA_RATIO ** (l - 1) * factorial(n)
            w.add(_upper_margin(Fraction(sigma(n, l)), bound), f"n={n}, l={l}")
    return BoundReport("sigma_growth", "sigma_n^l <= (8/3)^(l-1) n!", f"0 <= n <= {top}, 1 <= l <= {top}",
                       w.margin, False, w.witness)


def check_T_decreasing(N: int) -> BoundReport:
    w = _Worst()
    for m in range(5, N + 1):
        a, b = compute_T(m), compute_T(m + 1)
        w.add((a - b) / a, f"m={m}")
    return BoundReport("T_decreasing", "T(m+1) < T(m)", f"5 <= m <= {N}", w.margin, True, w.witness)


def check_T_thresholds(N: int) -> list[BoundReport]:
    one, small = _Worst(), _Worst()
    for m in range(5, N + 1):
        t = compute_T(m)
        one.add(_upper_margin(t, Fraction(1)), f"m={m}")
        if m >= 9:
            small.add(_upper_margin(t, T_THRESHOLD), f"m={m}")
    return [
        BoundReport("T_below_one", "T(m) < 1", f"5 <= m <= {N}", one.margin, True, one.witness),
        BoundReport("T_below_477", "T(m) < 477/1000", f"9 <= m <= {N}", small.margin, True, small.witness),
    ]


def diagonal_pair_sum(m: int):
    """``sum_{k=1}^{m-1} (R_k R_{m-k})_1^1`` (coefficient of v^-m)."""
    total = Mat2.zero()
    for k in range(1, m):
        total = total + compute_R(k).matrix * compute_R(m - k).matrix
    return total.upper(1, 1)


def check_diagonal_pairs(N: int) -> BoundReport:
    w = _Worst()
    for m in range(7, N + 1, 2):
        lhs2 = diagonal_pair_sum(m).norm() / 4
        rhs = DIAG_PAIR_CONST * factorial(m - 3)
        w.add(_upper_margin(lhs2, rhs**2), f"m={m}")
    return BoundReport("diag_pair_sum", "(1/2)|sum_k (R_k R_{m-k})_1^1| <= (15/256)(m-3)!",
                       f"odd 7 <= m <= {N}", w.margin, False, w.witness)


def check_diagonal_lower(N: int) -> BoundReport:
    w = _Worst()
    for m in range(7, N + 1):
        rhs = DIAG_LOWER_CONST * factorial(m - 2)
        w.add(_lower_margin(_R_entry_norm(m, 1, 1), rhs**2), f"m={m}")
    return BoundReport("diag_lower", "|(R_m)_1^1| >= 0.13 (m-2)!", f"7 <= m <= {N}",
                       w.margin, False, w.witness)


def bounds_report(N: int) -> list[BoundReport]:
    """Every finite-range inequality of the non-vanishing argument, up to N."""
    if N < 9:
        raise ValueError("bounds_report needs N >= 9")
    return [
        check_C_decreasing(N),
        check_C_threshold(N),
        *check_R_entry_bounds(N),
        check_sigma(N),
        check_T_decreasing(N),
        *check_T_thresholds(N),
        check_diagonal_pairs(N),
        check_diagonal_lower(N),
    ]


# -- the separation |R_l| > |R'_l| -----------------------------------------


@dataclass(frozen=True)
class SeparationReport(BoundReport):
    lhs: Fraction | None = None  # |(R_l)|^2
    rhs: Fraction | None = None  # |(R'_l)|^2


def rprime_bound_check(l: int, entry: str = "offdiag") -> SeparationReport:
    """Exact check of ``|(R_l)_1^j| > |(R'_l)_1^j|`` by summing the full tail.

    ``entry`` is ``"offdiag"`` (j = 2) or ``"diag"`` (j = 1, odd l only).
    """
    if l < 5:
        raise ValueError("separation check is stated for l >= 5")
    if entry not in ("offdiag", "diag"):
        raise ValueError("entry must be 'offdiag' or 'diag'")
    if entry == "diag" and l % 2 == 0:
        raise ValueError("diagonal entries of r_l vanish for even l")
    upper = 2 if entry == "offdiag" else 1
    lead = compute_R(l).matrix.upper(1, upper).norm()
    tail = r_tail(l).upper(1, upper).norm()
    name = f"(R_{l})_1^{upper}"
    return SeparationReport(
        "tail_separation", f"|{name}| > |(R'_{l})_1^{upper}|", f"l = {l}",
        _lower_margin(lead, tail), True, f"|R|^2={lead}, |R'|^2={tail}", lead, tail,
    )


def hand_bound_l7() -> Fraction:
    """The upper bound for |(R'_7)_1^1| evaluated from its printed summands
    (sigma values 108, 52, 20, 6, 1).  About 11.3720; kept for comparison."""
    printed = ((3, 26, 64, 108), (4, 82, 256, 52), (5, 242, 1024, 20), (6, 730, 4096, 6),
               (7, 2186, 16384, 1))
    inner = sum((Fraction(num, n * den) * s for n, num, den, s in printed), Fraction(0))
    return DIAG_PAIR_CONST * 24 + inner / 2
