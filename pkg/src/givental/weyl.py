"""Quadratic Hamiltonians and their Weyl quantization.

Conventions (orthonormal basis ``e_0..e_{N-1}`` of H, indices 0-based):

* an H-valued Laurent series is expanded as
  ``f = sum_k q_k z^k + sum_k p_k (-z)^(-k-1)``, so the symplectic form
  ``Omega(f, g) = Res_{z=0} <f(-z), g(z)>`` equals ``sum dp^i_k ^ dq^i_k``;
* ``P(A)(f) = Omega(A f, f) / 2``;
* quantization: ``q q -> q q / hbar``, ``p q -> q d/dq``, ``p p -> hbar d d``.

The closed formulas for the lower/upper triangular generators
(:func:`construct_s_hat`, :func:`construct_r_hat`) satisfy
``construct_s_hat(s) == -quantize(hamiltonian_of(s))`` and likewise for r:
the closed formulas correspond to the Hamiltonian ``-P``.

Everything that formally involves infinitely many variables is cut off at
an explicit index ``K``; results carry a ``truncated`` flag telling whether
anything beyond the cutoff was dropped.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from fractions import Fraction
from math import comb, perm
from typing import Iterable, Mapping, NamedTuple, Sequence

from .exact import GaussRational, Number, ONE, ZERO, gauss


class Var(NamedTuple):
    """Darboux coordinate ``kind^i_k`` with kind ``"p"`` or ``"q"``."""

    kind: str
    i: int
    k: int

    def __str__(self):
        return f"{self.kind}[{self.i},{self.k}]"


def q(i: int, k: int) -> Var:
    return Var("q", i, k)


def p(i: int, k: int) -> Var:
    return Var("p", i, k)


# -- Laurent endomorphisms -------------------------------------------------


def _mat(rows, n: int) -> tuple:
    rows = tuple(tuple(gauss(x) for x in r) for r in rows)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"expected a {n}x{n} matrix")
    return rows


def _matmul(a, b):
    n = len(a)
    return tuple(
        tuple(sum((a[i][s] * b[s][j] for s in range(n)), ZERO) for j in range(n))
        for i in range(n)
    )


class LaurentEndo:
    """``A(z) = sum_d A_d z^d`` with finitely many N x N coefficient matrices."""

    def __init__(self, coeffs: Mapping[int, Sequence[Sequence[Number]]], dim: int | None = None):
        if dim is None:
            if not coeffs:
                raise ValueError("dim is required for an empty LaurentEndo")
            dim = len(next(iter(coeffs.values())))
        self.dim = dim
        self.coeffs = {}
        for d, m in coeffs.items():
            m = _mat(m, dim)
            if any(x for row in m for x in row):
                self.coeffs[int(d)] = m

    @classmethod
    def monomial(cls, power: int, matrix, dim: int | None = None) -> "LaurentEndo":
        return cls({power: matrix}, dim)

    @classmethod
    def scalar(cls, power: int, value: Number = 1, dim: int = 1) -> "LaurentEndo":
        return cls({power: [[value if i == j else 0 for j in range(dim)] for i in range(dim)]}, dim)

    def powers(self) -> list[int]:
        return sorted(self.coeffs)

    def window(self) -> int:
        """Largest |d| in the support (0 for the zero endomorphism)."""
        return max((abs(d) for d in self.coeffs), default=0)

    def __getitem__(self, d: int):
        zero = tuple(tuple(ZERO for _ in range(self.dim)) for _ in range(self.dim))
        return self.coeffs.get(d, zero)

    def __add__(self, other: "LaurentEndo") -> "LaurentEndo":
        out = dict(self.coeffs)
        for d, m in other.coeffs.items():
            if d in out:
                out[d] = tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(out[d], m))
            else:
                out[d] = m
        return LaurentEndo(out, self.dim)

    def scale(self, c: Number) -> "LaurentEndo":
        c = gauss(c)
        return LaurentEndo({d: [[c * x for x in r] for r in m] for d, m in self.coeffs.items()}, self.dim)

    def __sub__(self, other: "LaurentEndo") -> "LaurentEndo":
        return self + other.scale(-1)

    def __mul__(self, other: "LaurentEndo") -> "LaurentEndo":
        out: dict[int, tuple] = {}
        for d1, a in self.coeffs.items():
            for d2, b in other.coeffs.items():
                ab = _matmul(a, b)
                if d1 + d2 in out:
                    out[d1 + d2] = tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(out[d1 + d2], ab))
                else:
                    out[d1 + d2] = ab
        return LaurentEndo(out, self.dim)

    def bracket(self, other: "LaurentEndo") -> "LaurentEndo":
        return self * other - other * self

    def apply(self, f: Mapping[int, Sequence]) -> dict[int, list]:
        """Act on an H-valued Laurent polynomial ``{power: vector}``."""
        out: dict[int, list] = {}
        for d, m in self.coeffs.items():
            for e, vec in f.items():
                acc = out.setdefault(d + e, [ZERO] * self.dim)
                for i in range(self.dim):
                    acc[i] = acc[i] + sum((m[i][j] * vec[j] for j in range(self.dim)), ZERO)
        return out

    def __eq__(self, other):
        if not isinstance(other, LaurentEndo):
            return NotImplemented
        return self.dim == other.dim and self.coeffs == other.coeffs

    def __repr__(self):
        return f"LaurentEndo(dim={self.dim}, powers={self.powers()})"


def is_infinitesimal_symplectic(A: LaurentEndo) -> bool:
    """``A*(-z) + A(z) = 0``, i.e. ``(-1)^d A_d^T + A_d = 0`` for every d."""
    n = A.dim
    for d, m in A.coeffs.items():
        sign = -1 if d % 2 else 1
        for i in range(n):
            for j in range(n):
                if m[j][i] * sign + m[i][j]:
                    return False
    return True


def omega(f: Mapping[int, Sequence], g: Mapping[int, Sequence], metric=None) -> GaussRational:
    """``Res_{z=0} <f(-z), g(z)>`` for H-valued Laurent polynomials ``{power: vector}``."""
    total = ZERO
    for a, u in f.items():
        v = g.get(-1 - a)
        if v is None:
            continue
        if metric is None:
            pair = sum((gauss(x) * gauss(y) for x, y in zip(u, v)), ZERO)
        else:
            pair = sum(
                (gauss(u[i]) * gauss(metric[i][j]) * gauss(v[j]) for i in range(len(u)) for j in range(len(v))),
                ZERO,
            )
        total = total + (pair if a % 2 == 0 else -pair)
    return total


# -- polynomials in Darboux coordinates ---------------------------------


def _mono(vars_: Iterable[Var]) -> tuple[Var, ...]:
    return tuple(sorted(vars_))


class DarbouxPolynomial:
    """Polynomial in the ``p^i_k, q^i_k`` with Gaussian-rational coefficients.

    ``cutoff`` is the largest index k the polynomial is meant to be exact
    for; ``truncated`` records that terms with larger indices were dropped.
    """

    __slots__ = ("terms", "cutoff", "truncated")

    def __init__(self, terms: Mapping[Iterable[Var], Number] | None = None,
                 cutoff: int | None = None, truncated: bool = False):
        acc: dict[tuple[Var, ...], GaussRational] = defaultdict(lambda: ZERO)
        for mono, c in (terms or {}).items():
            acc[_mono(mono)] += gauss(c)
        self.terms = {m: c for m, c in acc.items() if c}
        self.cutoff = cutoff
        self.truncated = truncated

    @classmethod
    def var(cls, v: Var) -> "DarbouxPolynomial":
        return cls({(v,): 1})

    @classmethod
    def const(cls, c: Number) -> "DarbouxPolynomial":
        return cls({(): c})

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def variables(self) -> set[Var]:
        return {v for m in self.terms for v in m}

    def max_index(self) -> int:
        return max((v.k for v in self.variables()), default=-1)

    def _meta(self, other):
        cut = [c for c in (self.cutoff, getattr(other, "cutoff", None)) if c is not None]
        return (min(cut) if cut else None,
                self.truncated or getattr(other, "truncated", False))

    def __add__(self, other: "DarbouxPolynomial") -> "DarbouxPolynomial":
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, ZERO) + c
        return DarbouxPolynomial(t, *self._meta(other))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Number) -> "DarbouxPolynomial":
        c = gauss(c)
        return DarbouxPolynomial({m: c * x for m, x in self.terms.items()}, self.cutoff, self.truncated)

    def __mul__(self, other):
        if not isinstance(other, DarbouxPolynomial):
            return self.scale(other)
        t: dict = defaultdict(lambda: ZERO)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                t[_mono(m1 + m2)] += c1 * c2
        return DarbouxPolynomial(t, *self._meta(other))

    __rmul__ = scale

    def derivative(self, v: Var) -> "DarbouxPolynomial":
        t: dict = defaultdict(lambda: ZERO)
        for m, c in self.terms.items():
            n = m.count(v)
            if n:
                rest = list(m)
                rest.remove(v)
                t[tuple(rest)] += c * n
        return DarbouxPolynomial(t, self.cutoff, self.truncated)

    def restrict(self, K: int) -> "DarbouxPolynomial":
        """Drop every term containing a variable of index > K."""
        kept = {m: c for m, c in self.terms.items() if all(v.k <= K for v in m)}
        dropped = len(kept) != len(self.terms)
        return DarbouxPolynomial(kept, K, self.truncated or dropped)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussRational)):
            other = DarbouxPolynomial.const(other)
        if not isinstance(other, DarbouxPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"DarbouxPolynomial({str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=lambda m: (len(m), m)):
            c = self.terms[m]
            body = "*".join(str(v) for v in m)
            parts.append(_signed(c, body))
        return _join(parts)


def _signed(c: GaussRational, body: str) -> tuple[str, str]:
    """Sign and magnitude text for ``c * body``."""
    if c.is_real():
        sign = "-" if c.re < 0 else "+"
        mag = abs(c.re)
        if not body:
            return sign, str(mag)
        return sign, body if mag == 1 else f"{mag}*{body}"
    text = f"({c})"
    return "+", f"{text}*{body}" if body else text


def _join(parts) -> str:
    out = ""
    for n, (sign, text) in enumerate(parts):
        if n == 0:
            out = text if sign == "+" else f"-{text}"
        else:
            out += f" {sign} {text}"
    return out


def poisson_bracket(P1: DarbouxPolynomial, P2: DarbouxPolynomial) -> DarbouxPolynomial:
    """``sum_{i,k} dP1/dp dP2/dq - dP2/dp dP1/dq``."""
    v1, v2 = P1.variables(), P2.variables()
    labels = {(v.i, v.k) for v in v1 if v.kind == "p" and q(v.i, v.k) in v2}
    labels |= {(v.i, v.k) for v in v2 if v.kind == "p" and q(v.i, v.k) in v1}
    out = DarbouxPolynomial({}, *P1._meta(P2))
    for i, k in sorted(labels):
        pv, qv = p(i, k), q(i, k)
        out = out + P1.derivative(pv) * P2.derivative(qv) - P2.derivative(pv) * P1.derivative(qv)
    return out


def _darboux_series(dim: int, K: int) -> dict[int, list[dict[Var, GaussRational]]]:
    """The generic element ``sum q_k z^k + sum p_k (-z)^(-k-1)`` with k <= K,
    as ``{power: [linear form per component]}``."""
    f: dict[int, list] = {}
    for k in range(K + 1):
        f[k] = [{q(i, k): ONE} for i in range(dim)]
        sign = ONE if (k + 1) % 2 == 0 else -ONE
        f[-k - 1] = [{p(i, k): sign} for i in range(dim)]
    return f


def _apply_linear(A: LaurentEndo, f):
    out: dict[int, list] = {}
    for d, m in A.coeffs.items():
        for e, vec in f.items():
            acc = out.setdefault(d + e, [dict() for _ in range(A.dim)])
            for i in range(A.dim):
                for j in range(A.dim):
                    if not m[i][j]:
                        continue
                    for v, c in vec[j].items():
                        acc[i][v] = acc[i].get(v, ZERO) + m[i][j] * c
    return out


def _quadratic_form(A: LaurentEndo, K: int) -> DarbouxPolynomial:
    f = _darboux_series(A.dim, K)
    af = _apply_linear(A, f)
    terms: dict = defaultdict(lambda: ZERO)
    for a, u in af.items():
        v = f.get(-1 - a)
        if v is None:
            continue
        sign = ONE if a % 2 == 0 else -ONE
        for i in range(A.dim):
            for x, cx in u[i].items():
                for y, cy in v[i].items():
                    terms[_mono((x, y))] += sign * cx * cy
    return DarbouxPolynomial(terms)


def hamiltonian_of(A: LaurentEndo, K: int) -> DarbouxPolynomial:
    """``P(A)(f) = Omega(A f, f) / 2`` restricted to variables of index <= K."""
    if not is_infinitesimal_symplectic(A):
        raise ValueError("A is not infinitesimally symplectic")
    exact = _quadratic_form(A, K).scale(Fraction(1, 2))
    # A term of index > K pairs with one of index <= K + window; one extra
    # level of lookahead decides whether the cutoff dropped anything.
    wider = _quadratic_form(A, K + A.window() + 1)
    truncated = any(v.k > K for m in wider.terms for v in m)
    return DarbouxPolynomial(exact.terms, K, truncated)


# -- differential operators on the Fock space -------------------------------


def _counter_key(c: Counter) -> tuple:
    return tuple(sorted(c.elements()))


class FockOperator:
    """Normal-ordered operator ``sum c * q^alpha (d/dq)^beta hbar^h``.

    Terms are keyed by ``(q-labels, d-labels, h)`` where labels are sorted
    tuples of ``(i, k)`` pairs (repeats mean powers).
    """

    __slots__ = ("terms", "cutoff", "truncated")

    def __init__(self, terms: Mapping[tuple, Number] | None = None,
                 cutoff: int | None = None, truncated: bool = False):
        acc: dict = defaultdict(lambda: ZERO)
        for (qs, ds, h), c in (terms or {}).items():
            acc[(tuple(sorted(qs)), tuple(sorted(ds)), int(h))] += gauss(c)
        self.terms = {key: c for key, c in acc.items() if c}
        self.cutoff = cutoff
        self.truncated = truncated

    @classmethod
    def identity(cls) -> "FockOperator":
        return cls({((), (), 0): 1})

    @classmethod
    def multiplication(cls, i: int, k: int) -> "FockOperator":
        return cls({(((i, k),), (), 0): 1})

    @classmethod
    def derivation(cls, i: int, k: int) -> "FockOperator":
        return cls({((), ((i, k),), 0): 1})

    def _meta(self, other):
        cut = [c for c in (self.cutoff, other.cutoff) if c is not None]
        return min(cut) if cut else None, self.truncated or other.truncated

    @classmethod
    def _trusted(cls, terms: dict, cutoff, truncated) -> "FockOperator":
        # terms already normalized: sorted keys, no zero coefficients
        op = object.__new__(cls)
        op.terms, op.cutoff, op.truncated = terms, cutoff, truncated
        return op

    def _combine(self, other: "FockOperator", sign: int) -> "FockOperator":
        t = dict(self.terms)
        for key, c in other.terms.items():
            v = t[key] + c if sign > 0 and key in t else (t[key] - c if key in t else (c if sign > 0 else -c))
            if v:
                t[key] = v
            else:
                t.pop(key, None)
        return FockOperator._trusted(t, *self._meta(other))

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return self._combine(other, 1)

    def scale(self, c: Number) -> "FockOperator":
        c = gauss(c)
        return FockOperator({k: c * x for k, x in self.terms.items()}, self.cutoff, self.truncated)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return op_compose(self, other)

    def is_scalar(self) -> bool:
        return all(not qs and not ds for qs, ds, _ in self.terms)

    def scalar_value(self) -> GaussRational:
        """Value of a scalar, hbar-free operator."""
        if not self.terms:
            return ZERO
        if set(self.terms) != {((), (), 0)}:
            raise ValueError("operator is not an hbar-free scalar")
        return self.terms[((), (), 0)]

    def hbar_powers(self) -> set[int]:
        return {h for _, _, h in self.terms}

    def __eq__(self, other):
        if not isinstance(other, FockOperator):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def to_json(self) -> list[dict]:
        return [
            {"q": [list(x) for x in qs], "d": [list(x) for x in ds], "hbar": h, "coeff": str(c)}
            for (qs, ds, h), c in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, data: Iterable[Mapping]) -> "FockOperator":
        return cls({
            (tuple(tuple(x) for x in t["q"]), tuple(tuple(x) for x in t["d"]), t["hbar"]):
                GaussRational.parse(t["coeff"])
            for t in data
        })

    def __repr__(self):
        return f"FockOperator({str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (qs, ds, h), c in sorted(self.terms.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), kv[0])):
            factors = [f"q[{i},{k}]" for i, k in qs] + [f"d[{i},{k}]" for i, k in ds]
            if h:
                factors.append("hbar" if h == 1 else f"hbar^{h}")
            parts.append(_signed(c, "*".join(factors)))
        return _join(parts)


def _normal_order(ds: tuple, qs: tuple):
    """Rewrite ``d^ds q^qs`` as ``sum coeff * q^a d^b``; yields (coeff, qs, ds)."""
    if not ds or not qs or set(ds).isdisjoint(qs):
        yield 1, qs, ds
        return
    dc, qc = Counter(ds), Counter(qs)
    shared = [v for v in dc if v in qc]
    # each shared variable contributes sum_j C(b, j) c!/(c-j)! q^(c-j) d^(b-j)
    options = []
    for v in shared:
        b, c = dc[v], qc[v]
        options.append([(comb(b, j) * perm(c, j), v, j) for j in range(min(b, c) + 1)])

    def rec(idx, coeff, qcur: Counter, dcur: Counter):
        if idx == len(options):
            yield coeff, qcur, dcur
            return
        for factor, v, j in options[idx]:
            if j:
                q2, d2 = qcur.copy(), dcur.copy()
                q2[v] -= j
                d2[v] -= j
            else:
                q2, d2 = qcur, dcur
            yield from rec(idx + 1, coeff * factor, q2, d2)

    for coeff, qcur, dcur in rec(0, 1, qc, dc):
        yield coeff, _counter_key(qcur), _counter_key(dcur)


def op_compose(a: FockOperator, b: FockOperator) -> FockOperator:
    """Product ``a b`` brought to normal order with ``[d/dq, q] = 1``."""
    out: dict = defaultdict(lambda: ZERO)
    for (q1, d1, h1), c1 in a.terms.items():
        for (q2, d2, h2), c2 in b.terms.items():
            c = c1 * c2
            for n, qs, ds in _normal_order(d1, q2):
                key = (tuple(sorted(q1 + qs)), tuple(sorted(ds + d2)), h1 + h2)
                out[key] = out[key] + (c * n if n != 1 else c)
    return FockOperator._trusted({k: v for k, v in out.items() if v}, *a._meta(b))


def _labels(op: FockOperator, slot: int) -> set:
    return {x for key in op.terms for x in key[slot]}


def op_commutator(a: FockOperator, b: FockOperator) -> FockOperator:
    # no derivative of one side hits a variable of the other: they commute
    if _labels(a, 1).isdisjoint(_labels(b, 0)) and _labels(b, 1).isdisjoint(_labels(a, 0)):
        return FockOperator._trusted({}, *a._meta(b))
    return op_compose(a, b) - op_compose(b, a)


def quantize(P: DarbouxPolynomial) -> FockOperator:
    """Weyl quantization of a polynomial of degree <= 2 (no linear part)."""
    out: dict = defaultdict(lambda: ZERO)
    for mono, c in P.terms.items():
        if len(mono) == 0:
            out[((), (), 0)] += c
        elif len(mono) == 1:
            raise ValueError("linear terms quantize to half-integer hbar powers; not supported")
        elif len(mono) == 2:
            x, y = mono
            kinds = x.kind + y.kind
            if kinds == "qq":
                out[(((x.i, x.k), (y.i, y.k)), (), -1)] += c
            elif kinds == "pp":
                out[((), ((x.i, x.k), (y.i, y.k)), 1)] += c
            else:
                pv, qv = (x, y) if x.kind == "p" else (y, x)
                out[(((qv.i, qv.k),), ((pv.i, pv.k),), 0)] += c
        else:
            raise ValueError("quantize accepts polynomials of degree <= 2")
    return FockOperator(out, P.cutoff, P.truncated)


def cocycle(P1: DarbouxPolynomial, P2: DarbouxPolynomial) -> FockOperator:
    """``[P1^, P2^] - {P1, P2}^``; a scalar for quadratic P1, P2."""
    return op_commutator(quantize(P1), quantize(P2)) - quantize(poisson_bracket(P1, P2))


def cocycle_formula(P1: DarbouxPolynomial, P2: DarbouxPolynomial) -> Fraction:
    """Closed form of the cocycle on monomials in an orthonormal frame:
    ``+-(1 + delta^{ij} delta_{kl})`` for ``(p^i_k p^j_l, q^i_k q^j_l)`` and 0 otherwise."""
    (m1, c1), = P1.terms.items()
    (m2, c2), = P2.terms.items()
    labels1 = sorted((v.i, v.k) for v in m1)
    labels2 = sorted((v.i, v.k) for v in m2)
    kinds1 = {v.kind for v in m1}
    kinds2 = {v.kind for v in m2}
    if len(m1) != 2 or len(m2) != 2 or labels1 != labels2:
        return Fraction(0)
    value = 1 + (labels1[0] == labels1[1])
    if kinds1 == {"p"} and kinds2 == {"q"}:
        sign = 1
    elif kinds1 == {"q"} and kinds2 == {"p"}:
        sign = -1
    else:
        return Fraction(0)
    prod_c = c1 * c2
    if not prod_c.is_real():
        raise ValueError("cocycle_formula expects real coefficients")
    return sign * value * prod_c.re


# -- closed formulas for the triangular generators ----------------------------


def construct_s_hat(s: LaurentEndo, K: int) -> FockOperator:
    """``sum (s_l)_{ij} q^j_{l+n} d/dq^i_n + 1/(2 hbar) sum (-1)^n (s_l)_{ij} q^i_n q^j_{l-n-1}``
    for ``s = sum_l s_l z^-l``, with every index <= K."""
    if any(d >= 0 for d in s.coeffs):
        raise ValueError("s must contain only negative powers of z")
    if not is_infinitesimal_symplectic(s):
        raise ValueError("s is not infinitesimally symplectic")
    N = s.dim
    out: dict = defaultdict(lambda: ZERO)
    truncated = False
    for d, m in s.coeffs.items():
        l = -d
        for i in range(N):
            for j in range(N):
                c = m[i][j]
                if not c:
                    continue
                truncated = True  # the shift sum over n is infinite
                for n in range(0, K - l + 1):
                    out[(((j, l + n),), ((i, n),), 0)] += c
                for n in range(l):
                    if n > K or l - n - 1 > K:
                        continue
                    sign = 1 if n % 2 == 0 else -1
                    out[(((i, n), (j, l - n - 1)), (), -1)] += c * Fraction(sign, 2)
    return FockOperator(out, K, truncated)


def construct_r_hat(r: LaurentEndo, K: int) -> FockOperator:
    """``sum (r_l)_{ij} q^j_n d/dq^i_{n+l} + hbar/2 sum_{m<l} (-1)^(m+1) (r_l)_{ij} d^i_{l-1-m} d^j_m``
    for ``r = sum_l r_l z^l``, with every index <= K."""
    if any(d <= 0 for d in r.coeffs):
        raise ValueError("r must contain only positive powers of z")
    if not is_infinitesimal_symplectic(r):
        raise ValueError("r is not infinitesimally symplectic")
    N = r.dim
    out: dict = defaultdict(lambda: ZERO)
    truncated = False
    for l, m in r.coeffs.items():
        for i in range(N):
            for j in range(N):
                c = m[i][j]
                if not c:
                    continue
                truncated = True
                for n in range(0, K - l + 1):
                    out[(((j, n),), ((i, n + l),), 0)] += c
                for mm in range(l):
                    if l - 1 - mm > K or mm > K:
                        truncated = True
                        continue
                    sign = -1 if mm % 2 == 0 else 1  # (-1)^(m+1)
                    out[((), ((i, l - 1 - mm), (j, mm)), 1)] += c * Fraction(sign, 2)
    return FockOperator(out, K, truncated)
