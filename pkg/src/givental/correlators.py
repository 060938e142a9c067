"""Formal correlator expressions and the loop-group derivative actions on them.

A term is ``coefficient * [genus sums] * coefficient atoms * q-variables *
correlators``.  Index labels follow the summation convention:

* ``int`` labels are concrete basis indices (orthonormal basis, 0-based);
* plain ``str`` labels (``"x"``, ``"i1"``) are free symbolic indices;
* labels starting with ``#`` are bound: each occurs exactly twice in a term
  and is summed over the basis, which for an orthonormal metric is the same
  as a gluing contraction ``<.. d^mu> g_{mu mu'} <d^mu' ..>``.

Genera are affine expressions in symbols (``g``, ``g-1``, ``g-g'``).  When
the genus-splitting term acts on a symbolic genus the sum over ``g'`` is kept
as a formal ``sum[g'=0..g]`` attached to the term.

Text form (round-trips through :func:`parse_expression`)::

    -1/2 * sum[g'=0..g] * r1[#1,#2] * <0 #1 | 1 x>_{g'} * <0 #2>_{g-g'}
    + q[#1,2] * s1[#2,#1] * <0,1 #2 | 0 y>_0

An insertion is written ``k label`` or ``k,b label`` where ``b`` is the
ancestor (psi-bar) power.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence, Union

from .exact import GaussRational, Number, ONE, ZERO, gauss

Label = Union[int, str]

_fresh_counter = itertools.count()


def _fresh_label() -> str:
    return f"#~{next(_fresh_counter)}"


def _fresh_genus() -> str:
    return f"g'~{next(_fresh_counter)}"


def is_bound(label: Label) -> bool:
    return isinstance(label, str) and label.startswith("#")


# -- genus expressions ------------------------------------------------------


class Genus:
    """Affine integer expression ``const + sum coeff * symbol``."""

    __slots__ = ("const", "syms")

    def __init__(self, const: int = 0, syms: Mapping[str, int] | Iterable = ()):
        items = syms.items() if isinstance(syms, Mapping) else syms
        acc: dict[str, int] = defaultdict(int)
        for name, c in items:
            acc[name] += c
        object.__setattr__(self, "const", int(const))
        object.__setattr__(self, "syms", tuple(sorted((n, c) for n, c in acc.items() if c)))

    def __setattr__(self, name, value):
        raise AttributeError("Genus is immutable")

    @classmethod
    def of(cls, g: "Genus | int | str") -> "Genus":
        if isinstance(g, Genus):
            return g
        if isinstance(g, int):
            return cls(g)
        return cls.parse(g)

    @classmethod
    def parse(cls, text: str) -> "Genus":
        text = text.strip()
        if text.startswith("{") and text.endswith("}"):
            text = text[1:-1]
        if not text:
            raise ValueError("empty genus")
        pos, const, syms = 0, 0, []
        token = re.compile(r"\s*([+-]?)\s*(\d*)\s*([A-Za-z_][\w~]*'*[\w~]*)?\s*")
        while pos < len(text):
            m = token.match(text, pos)
            sign_, digits, name = m.groups() if m else (None, "", None)
            if not m or (not digits and not name) or (pos and not sign_):
                raise ValueError(f"bad genus expression {text!r}")
            sign = -1 if sign_ == "-" else 1
            if name:
                syms.append((name, sign * int(digits or 1)))
            else:
                const += sign * int(digits)
            pos = m.end()
        return cls(const, syms)

    def __add__(self, other):
        o = Genus.of(other)
        return Genus(self.const + o.const, list(self.syms) + list(o.syms))

    def __sub__(self, other):
        o = Genus.of(other)
        return Genus(self.const - o.const, list(self.syms) + [(n, -c) for n, c in o.syms])

    def is_int(self) -> bool:
        return not self.syms

    def value(self) -> int:
        if self.syms:
            raise ValueError(f"genus {self} is symbolic")
        return self.const

    def names(self) -> list[str]:
        return [n for n, _ in self.syms]

    def rename(self, mapping: Mapping[str, str]) -> "Genus":
        return Genus(self.const, [(mapping.get(n, n), c) for n, c in self.syms])

    def substitute(self, values: Mapping[str, int]) -> "Genus":
        const, rest = self.const, []
        for n, c in self.syms:
            if n in values:
                const += c * values[n]
            else:
                rest.append((n, c))
        return Genus(const, rest)

    def key(self, rank: Callable[[str], tuple] | None = None) -> tuple:
        rank = rank or (lambda n: (0, n))
        return (self.const, tuple(sorted((rank(n), c) for n, c in self.syms)))

    def __eq__(self, other):
        if isinstance(other, (int, str)):
            other = Genus.of(other)
        if not isinstance(other, Genus):
            return NotImplemented
        return self.const == other.const and self.syms == other.syms

    def __hash__(self):
        return hash((self.const, self.syms))

    def __repr__(self):
        return f"Genus({str(self)!r})"

    def __str__(self):
        parts = []
        for n, c in self.syms:
            mag = "" if abs(c) == 1 else str(abs(c))
            parts.append(("-" if c < 0 else "+") + mag + n)
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+") + str(abs(self.const)))
        out = "".join(parts)
        return out[1:] if out.startswith("+") else out

    def tex(self) -> str:
        s = str(self)
        return s if re.fullmatch(r"\d+|[A-Za-z_]\w*", s) else "{" + s + "}"


# -- factors ------------------------------------------------------------------


class Insertion(NamedTuple):
    """``d^label_{k, bar}``: descendent power k, ancestor power bar."""

    label: Label
    k: int
    bar: int = 0

    def __str__(self):
        power = f"{self.k},{self.bar}" if self.bar else f"{self.k}"
        return f"{power} {self.label}"


class Corr(NamedTuple):
    """Correlator symbol ``<insertions>_genus``."""

    genus: Genus
    ins: tuple

    def labels(self):
        return [x.label for x in self.ins]

    def __str__(self):
        return "<" + " | ".join(str(x) for x in self.ins) + ">_" + self.genus.tex()


class QVar(NamedTuple):
    """Darboux coordinate ``q^label_n`` appearing as a multiplicative factor."""

    label: Label
    n: int

    def labels(self):
        return [self.label]

    def __str__(self):
        return f"q[{self.label},{self.n}]"


class Coef(NamedTuple):
    """Matrix entry ``(family_level)_{a b}`` left unevaluated."""

    family: str
    level: int
    a: Label
    b: Label

    def labels(self):
        return [self.a, self.b]

    def __str__(self):
        return f"{self.family}{self.level}[{self.a},{self.b}]"


Factor = Union[Corr, QVar, Coef]

_KIND_ORDER = {Coef: 0, QVar: 1, Corr: 2}


def correlator(genus, insertions: Iterable) -> Corr:
    """Build a correlator from ``(k, label)`` / ``(k, label, bar)`` tuples or Insertions."""
    ins = []
    for x in insertions:
        if isinstance(x, Insertion):
            ins.append(x)
        else:
            k, label, *rest = x
            ins.append(Insertion(label, k, rest[0] if rest else 0))
    return Corr(Genus.of(genus), tuple(ins))


# -- canonical form of terms -------------------------------------------------


def _label_key(label: Label, bound_rank) -> tuple:
    if isinstance(label, int):
        return (0, label, "")
    if is_bound(label):
        return (2, bound_rank(label), "")
    return (1, 0, label)


def _factor_key(f: Factor, lrank, grank) -> tuple:
    if isinstance(f, Coef):
        return (0, f.family, f.level, _label_key(f.a, lrank), _label_key(f.b, lrank))
    if isinstance(f, QVar):
        return (1, f.n, _label_key(f.label, lrank))
    ins = tuple(sorted((x.k, x.bar, _label_key(x.label, lrank)) for x in f.ins))
    return (2, f.genus.key(grank), len(f.ins), ins)


_MAX_CANDIDATES = 50_000


def _canonical_term(factors: Sequence[Factor], gsums: Sequence[tuple[str, Genus]]):
    """Return ``(gsums, factors)`` with bound labels/genera renumbered canonically."""
    counts = Counter(l for f in factors for l in f.labels() if is_bound(l))
    bad = [l for l, c in counts.items() if c != 2]
    if bad:
        raise ValueError(f"bound labels must occur exactly twice in a term: {bad}")
    gbound = {v for v, _ in gsums}

    placeholder_l = lambda l: -1  # noqa: E731
    placeholder_g = lambda n: (1, "") if n in gbound else (0, n)  # noqa: E731

    # shape keys ignore the names of bound objects
    def ins_shape(x: Insertion):
        return (x.k, x.bar, _label_key(x.label, placeholder_l))

    decorated = []
    for f in factors:
        if isinstance(f, Corr):
            ins = sorted(f.ins, key=ins_shape)
            f = Corr(f.genus, tuple(ins))
        decorated.append((_factor_key(f, placeholder_l, placeholder_g), f))
    decorated.sort(key=lambda kf: kf[0])

    # tie groups among factors, and among insertions of each correlator
    groups = [list(g) for _, g in itertools.groupby(range(len(decorated)), key=lambda i: decorated[i][0])]
    ins_groups = []
    for _, f in decorated:
        if isinstance(f, Corr):
            ig = [list(g) for _, g in itertools.groupby(range(len(f.ins)), key=lambda i: ins_shape(f.ins[i]))]
        else:
            ig = [[0]]
        ins_groups.append(ig)

    def perms(group):
        if len(group) == 1:
            return [tuple(group)]
        return list(itertools.permutations(group))

    factor_choices = [perms(g) for g in groups]
    ins_choices = [[perms(g) for g in ig] for ig in ins_groups]
    total = 1
    for c in factor_choices:
        total *= len(c)
    for fc in ins_choices:
        for c in fc:
            total *= len(c)
    exhaustive = total <= _MAX_CANDIDATES
    if not exhaustive:
        factor_choices = [c[:1] for c in factor_choices]
        ins_choices = [[c[:1] for c in fc] for fc in ins_choices]

    best = None
    for forder_parts in itertools.product(*factor_choices):
        forder = [i for part in forder_parts for i in part]
        for iorders in itertools.product(*[itertools.product(*ic) for ic in ins_choices]):
            lmap: dict[str, int] = {}
            gmap: dict[str, int] = {}
            out = []

            def lr(l):
                if l not in lmap:
                    lmap[l] = len(lmap) + 1
                return lmap[l]

            def gr(n):
                if n in gbound:
                    if n not in gmap:
                        gmap[n] = len(gmap) + 1
                    return (1, gmap[n])
                return (0, n)

            for idx in forder:
                f = decorated[idx][1]
                if isinstance(f, Corr):
                    order = [i for part in iorders[idx] for i in part]
                    ins = tuple(f.ins[i] for i in order)
                    gk = f.genus.key(gr)
                    ik = tuple((x.k, x.bar, _label_key(x.label, lr)) for x in ins)
                    out.append((2, gk, len(ins), ik))
                elif isinstance(f, QVar):
                    out.append((1, f.n, _label_key(f.label, lr)))
                else:
                    out.append((0, f.family, f.level, _label_key(f.a, lr), _label_key(f.b, lr)))
            unreferenced = sorted(gbound - set(gmap))
            for n in unreferenced:
                gr(n)
            gk_sums = tuple(sorted((gmap[v], up.key(gr)) for v, up in gsums))
            cand = (gk_sums, tuple(out))
            if best is None or cand < best[0]:
                best = (cand, forder, iorders, dict(lmap), dict(gmap))
    _, forder, iorders, lmap, gmap = best

    lname = {l: f"#{n}" for l, n in lmap.items()}
    gname = {g: "g" + "'" * n for g, n in gmap.items()}

    def rl(l):
        return lname.get(l, l) if is_bound(l) else l

    new_factors = []
    for idx in forder:
        f = decorated[idx][1]
        if isinstance(f, Corr):
            order = [i for part in iorders[idx] for i in part]
            new_factors.append(Corr(f.genus.rename(gname),
                                    tuple(Insertion(rl(f.ins[i].label), f.ins[i].k, f.ins[i].bar) for i in order)))
        elif isinstance(f, QVar):
            new_factors.append(QVar(rl(f.label), f.n))
        else:
            new_factors.append(Coef(f.family, f.level, rl(f.a), rl(f.b)))
    new_gsums = tuple(sorted((gname[v], up.rename(gname)) for v, up in gsums))
    return new_gsums, tuple(new_factors)


# -- expressions ---------------------------------------------------------------


class CorrelatorExpression:
    """Formal sum of terms in canonical form; equality is term-wise."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, Number] | None = None):
        self.terms: dict[tuple, GaussRational] = {}
        for key, c in (terms or {}).items():
            self._add(key, gauss(c))

    def _add(self, key, c: GaussRational):
        v = self.terms.get(key, ZERO) + c
        if v:
            self.terms[key] = v
        else:
            self.terms.pop(key, None)

    @classmethod
    def from_terms(cls, items: Iterable[tuple]) -> "CorrelatorExpression":
        """From ``(coeff, factors)`` or ``(coeff, factors, gsums)`` tuples."""
        e = cls()
        for item in items:
            c, factors, *rest = item
            e.add_term(c, factors, rest[0] if rest else ())
        return e

    @classmethod
    def symbol(cls, genus, insertions: Iterable, coeff: Number = 1) -> "CorrelatorExpression":
        return cls.from_terms([(coeff, [correlator(genus, insertions)])])

    def add_term(self, c: Number, factors: Sequence[Factor], gsums: Sequence[tuple] = ()):
        c = gauss(c)
        if not c:
            return
        gsums = tuple((v, Genus.of(up)) for v, up in gsums)
        self._add(_canonical_term(list(factors), gsums), c)

    def __iter__(self):
        """Yields ``(coeff, factors, gsums)``."""
        for (gsums, factors), c in sorted(self.terms.items(), key=lambda kv: repr(kv[0])):
            yield c, factors, gsums

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "CorrelatorExpression") -> "CorrelatorExpression":
        out = CorrelatorExpression()
        out.terms = dict(self.terms)
        for k, c in other.terms.items():
            out._add(k, c)
        return out

    def scale(self, c: Number) -> "CorrelatorExpression":
        c = gauss(c)
        out = CorrelatorExpression()
        if c:
            out.terms = {k: v * c for k, v in self.terms.items()}
        return out

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, CorrelatorExpression):
            return self.scale(other)
        out = CorrelatorExpression()
        for (g1, f1), c1 in self.terms.items():
            for (g2, f2), c2 in other.terms.items():
                (g2r, f2r) = _rename_apart(g2, f2)
                out.add_term(c1 * c2, list(f1) + list(f2r), tuple(g1) + tuple(g2r))
        return out

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, CorrelatorExpression):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"CorrelatorExpression({str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for c, factors, gsums in self._display_order():
            body = [f"sum[{v}=0..{up}]" for v, up in gsums] + [str(f) for f in factors]
            parts.append(_signed_text(c, " * ".join(body)))
        out = ""
        for n, (sign, text) in enumerate(parts):
            out = (text if sign == "+" else f"-{text}") if n == 0 else f"{out} {sign} {text}"
        return out

    def _display_order(self):
        def key(item):
            (gsums, factors), _ = item
            ncorr = sum(isinstance(f, Corr) for f in factors)
            return (len(gsums), ncorr, len(factors), str(factors))
        for (gsums, factors), c in sorted(self.terms.items(), key=key):
            yield c, factors, gsums


def _signed_text(c: GaussRational, body: str) -> tuple[str, str]:
    if c.is_real():
        sign = "-" if c.re < 0 else "+"
        mag = abs(c.re)
        if not body:
            return sign, str(mag)
        return sign, body if mag == 1 else f"{mag} * {body}"
    text = f"({c})"
    return "+", f"{text} * {body}" if body else text


def _rename_apart(gsums, factors):
    lmap, gmap = {}, {}
    for f in factors:
        for l in f.labels():
            if is_bound(l) and l not in lmap:
                lmap[l] = _fresh_label()
    for v, _ in gsums:
        gmap[v] = _fresh_genus()
    return _relabel(gsums, factors, lmap, gmap)


def _relabel(gsums, factors, lmap, gmap):
    def rl(l):
        return lmap.get(l, l) if isinstance(l, str) else l

    out = []
    for f in factors:
        if isinstance(f, Corr):
            out.append(Corr(f.genus.rename(gmap), tuple(Insertion(rl(x.label), x.k, x.bar) for x in f.ins)))
        elif isinstance(f, QVar):
            out.append(QVar(rl(f.label), f.n))
        else:
            out.append(Coef(f.family, f.level, rl(f.a), rl(f.b)))
    return tuple((gmap.get(v, v), up.rename(gmap)) for v, up in gsums), tuple(out)


# -- parsing -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<sum>sum\[(?P<gv>[A-Za-z_][\w~]*'*[\w~]*)=0\.\.(?P<gup>[^\]]+)\])
  | (?P<corr><(?P<cbody>[^>]*)>_(?P<cgen>\{[^}]*\}|[\w']+))
  | (?P<qvar>q\[(?P<ql>[^,\]]+),(?P<qn>\d+)\])
  | (?P<coef>(?P<cf>[A-Za-z]+)(?P<cl>\d+)\[(?P<ca>[^,\]]+),(?P<cb>[^,\]]+)\])
  | (?P<num>\((?P<gnum>[^)]*)\)|\d+(?:/\d+)?)
  | (?P<op>[+\-*])
""", re.VERBOSE)


def _parse_label(text: str) -> Label:
    text = text.strip()
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    if not re.fullmatch(r"#?[\w~']+", text):
        raise ValueError(f"bad index label {text!r}")
    return text


def _parse_corr(body: str, genus: str) -> Corr:
    ins = []
    body = body.strip()
    if body:
        for chunk in body.split("|"):
            m = re.fullmatch(r"\s*(\d+)(?:,(\d+))?\s+(\S+)\s*", chunk)
            if not m:
                raise ValueError(f"bad insertion {chunk!r}")
            ins.append(Insertion(_parse_label(m.group(3)), int(m.group(1)), int(m.group(2) or 0)))
    return Corr(Genus.parse(genus), tuple(ins))


def parse_expression(text: str) -> CorrelatorExpression:
    """Parse the textual form produced by ``str(expression)``."""
    pos, tokens = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse expression at {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.group("ws"):
            continue
        tokens.append(m)
    expr = CorrelatorExpression()
    if len(tokens) == 1 and tokens[0].group("num") == "0":
        return expr
    sign, coeff, factors, gsums = 1, ONE, [], []
    expecting = True  # at the start of a term or after '*'
    started = False

    def flush():
        if started:
            expr.add_term(coeff * sign, factors, gsums)

    for m in tokens:
        if m.group("op") in ("+", "-") and not expecting:
            flush()
            sign, coeff, factors, gsums = (1 if m.group("op") == "+" else -1), ONE, [], []
            expecting, started = True, False
        elif m.group("op") in ("+", "-"):
            if m.group("op") == "-":
                sign = -sign
        elif m.group("op") == "*":
            if expecting:
                raise ValueError("unexpected '*'")
            expecting = True
        else:
            if not expecting:
                raise ValueError("missing '*' between factors")
            expecting, started = False, True
            if m.group("num"):
                coeff = coeff * GaussRational.parse(m.group("gnum") or m.group("num"))
            elif m.group("sum"):
                gsums.append((m.group("gv"), Genus.parse(m.group("gup"))))
            elif m.group("corr"):
                factors.append(_parse_corr(m.group("cbody"), m.group("cgen")))
            elif m.group("qvar"):
                factors.append(QVar(_parse_label(m.group("ql")), int(m.group("qn"))))
            else:
                factors.append(Coef(m.group("cf"), int(m.group("cl")),
                                    _parse_label(m.group("ca")), _parse_label(m.group("cb"))))
    if expecting and started:
        raise ValueError("expression ends with an operator")
    flush()
    return expr


# -- kappa classes ---------------------------------------------------------------


class KappaPolynomial:
    """Polynomial in kappa classes: ``{sorted tuple of indices: integer coefficient}``."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, int] | None = None):
        acc: Counter = Counter()
        for mono, c in (terms or {}).items():
            acc[tuple(sorted(mono))] += c
        self.terms = {m: c for m, c in acc.items() if c}

    def mass(self) -> int:
        return sum(self.terms.values())

    def degree_set(self) -> set[int]:
        return {sum(m) for m in self.terms}

    def __eq__(self, other):
        if not isinstance(other, KappaPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"KappaPolynomial({str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for m in sorted(self.terms, key=lambda m: (-len(m), m)):
            c = self.terms[m]
            body = "".join(f"k[{a}]" for a in m)
            out.append(body if c == 1 else f"{c}*{body}")
        return " + ".join(out)


def cycles(perm: Sequence[int]) -> list[list[int]]:
    """Disjoint cycle decomposition of a permutation given in one-line form."""
    seen, out = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, j = [], start
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = perm[j]
        out.append(cyc)
    return out


def kappa_pushforward(ks: Sequence[int]) -> KappaPolynomial:
    """``sum_{sigma in S_l} prod_{cycles c} kappa_{sum_{j in c} k_j}``."""
    ks = list(ks)
    if not ks:
        raise ValueError("need at least one index")
    if any(k < 0 for k in ks):
        raise ValueError("kappa indices must be non-negative")
    acc: Counter = Counter()
    for perm in itertools.permutations(range(len(ks))):
        acc[tuple(sorted(sum(ks[j] for j in c) for c in cycles(perm)))] += 1
    return KappaPolynomial(acc)


# -- descendents to ancestors ------------------------------------------------------


def _two_point(a: Insertion, b: Insertion) -> Corr:
    return Corr(Genus(0), (a, b))


def descendent_to_ancestor(k: int, lbar: int, r: int, tail: Sequence = (), genus="g",
                           label: Label = "i") -> CorrelatorExpression:
    """Trade r powers of psi-bar at the first insertion of
    ``<d^label_{k, lbar} tail>_genus`` for descendents and genus-0 chains."""
    if r < 0 or r > lbar:
        raise ValueError("need 0 <= r <= lbar")
    if k < 0:
        raise ValueError("k must be non-negative")
    g = Genus.of(genus)
    tail = tuple(x if isinstance(x, Insertion) else Insertion(x[1], x[0], x[2] if len(x) > 2 else 0)
                 for x in tail)
    rest = lbar - r
    out = CorrelatorExpression()
    out.add_term(1, [Corr(g, (Insertion(label, k + r, rest),) + tail)])
    # branch after s steps on the first insertion; then a chain of p
    # two-point factors whose descendent powers add up to r-1-s-(p-1)
    for s in range(r):
        budget = r - 1 - s
        for p in range(1, budget + 2):
            sign = -1 if p % 2 else 1  # -(-1)^(p+1)
            for ks in _weak_compositions(budget - (p - 1), p):
                mus = [_fresh_label() for _ in range(p)]
                factors = [_two_point(Insertion(label, k + s), Insertion(mus[0], 0))]
                for a in range(p - 1):
                    factors.append(_two_point(Insertion(mus[a], ks[a]), Insertion(mus[a + 1], 0)))
                factors.append(Corr(g, (Insertion(mus[-1], ks[-1], rest),) + tail))
                out.add_term(sign, factors)
    return out


def _weak_compositions(n: int, parts: int):
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _weak_compositions(n - first, parts - 1):
            yield (first,) + rest


# -- the derivative actions ------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """Coefficient family ``(x_l)_{ij}`` for finitely many levels l.

    ``values`` maps levels to N x N matrices (numeric mode) or is None, in
    which case entries stay as :class:`Coef` atoms and new summation
    indices become bound labels.
    """

    name: str
    levels: tuple
    values: Mapping | None = None

    @classmethod
    def symbolic(cls, name: str, levels: Iterable[int]) -> "Family":
        return cls(name, tuple(sorted(set(levels))))

    @classmethod
    def numeric(cls, name: str, matrices: Mapping[int, Sequence[Sequence[Number]]]) -> "Family":
        vals = {l: tuple(tuple(gauss(x) for x in row) for row in m) for l, m in matrices.items()}
        return cls(name, tuple(sorted(vals)), vals)

    @property
    def dim(self) -> int | None:
        if self.values is None:
            return None
        return len(next(iter(self.values.values())))

    def indices(self):
        """Values of a freshly summed index: every basis vector, or one bound label."""
        if self.values is None:
            return [_fresh_label()]
        return list(range(self.dim))

    def entry(self, l: int, a: Label, b: Label):
        """``(scalar, atoms)`` for ``(x_l)_{ab}``, or None if it vanishes."""
        if self.values is None:
            return ONE, [Coef(self.name, l, a, b)]
        if not (isinstance(a, int) and isinstance(b, int)):
            raise ValueError("numeric families need concrete labels; expand() the expression first")
        v = self.values[l][a][b]
        return (v, []) if v else None


def _pair_indices(fam: Family):
    if fam.values is None:
        return [(_fresh_label(), _fresh_label())]
    return [(i, j) for i in range(fam.dim) for j in range(fam.dim)]


def _check_descendents(c: Corr):
    if any(x.bar for x in c.ins):
        raise ValueError("loop-group actions are defined on descendent insertions only")


def _s_on_correlator(c: Corr, fam: Family, cutoff: int):
    """Yields ``(scalar, atoms, replacement factors)`` for one correlator."""
    _check_descendents(c)
    is_zero_genus = c.genus.is_int() and c.genus.value() == 0
    if is_zero_genus and len(c.ins) < 2:
        raise ValueError("genus-0 correlators need at least two insertions for the s-action")
    for l in fam.levels:
        for n in range(0, cutoff - l + 1):
            for i, j in _pair_indices(fam):
                e = fam.entry(l, i, j)
                if e is None:
                    continue
                yield e[0], e[1] + [QVar(j, l + n)], [Corr(c.genus, (Insertion(i, n),) + c.ins)]
    for a, x in enumerate(c.ins):
        others = c.ins[:a] + c.ins[a + 1:]
        for l in fam.levels:
            if x.k - l < 0:
                continue
            for i in fam.indices():
                e = fam.entry(l, i, x.label)
                if e is None:
                    continue
                yield e[0], e[1], [Corr(c.genus, (Insertion(i, x.k - l),) + others)]
    if is_zero_genus and len(c.ins) == 2:
        (x1, x2) = c.ins
        l = x1.k + x2.k + 1
        if l in fam.levels:
            for sgn, a, b, kk in ((1, x1.label, x2.label, x1.k), (1, x2.label, x1.label, x2.k)):
                e = fam.entry(l, a, b)
                if e is None:
                    continue
                yield e[0] * Fraction((-1) ** kk, 2), e[1], []


def _subsets(items: tuple):
    n = len(items)
    for mask in range(1 << n):
        yield (tuple(items[i] for i in range(n) if mask >> i & 1),
               tuple(items[i] for i in range(n) if not mask >> i & 1))


def _r_on_correlator(c: Corr, fam: Family, cutoff: int):
    """Yields ``(scalar, atoms, replacement factors, new gsums)``."""
    _check_descendents(c)
    g = c.genus
    for l in fam.levels:
        for n in range(0, cutoff + 1):
            for i, j in _pair_indices(fam):
                e = fam.entry(l, i, j)
                if e is None:
                    continue
                yield e[0], e[1] + [QVar(j, n)], [Corr(g, (Insertion(i, n + l),) + c.ins)], ()
    for a, x in enumerate(c.ins):
        others = c.ins[:a] + c.ins[a + 1:]
        for l in fam.levels:
            for i in fam.indices():
                e = fam.entry(l, i, x.label)
                if e is None:
                    continue
                yield e[0], e[1], [Corr(g, (Insertion(i, x.k + l),) + others)], ()
    reducible = not (g.is_int() and g.value() == 0)
    for l in fam.levels:
        for m in range(l):
            half = Fraction(-1 if m % 2 == 0 else 1, 2)  # (-1)^(m+1) / 2
            if reducible:
                for i, j in _pair_indices(fam):
                    e = fam.entry(l, i, j)
                    if e is None:
                        continue
                    new = Corr(g - 1, (Insertion(i, l - 1 - m), Insertion(j, m)) + c.ins)
                    yield e[0] * half, e[1], [new], ()
            if g.is_int():
                splits = [(Genus(h), Genus(g.value() - h), ()) for h in range(g.value() + 1)]
            else:
                v = _fresh_genus()
                splits = [(Genus(0, {v: 1}), g - Genus(0, {v: 1}), ((v, g),))]
            for g1, g2, gs in splits:
                for left, right in _subsets(c.ins):
                    for i, j in _pair_indices(fam):
                        e = fam.entry(l, i, j)
                        if e is None:
                            continue
                        yield (e[0] * half, e[1],
                               [Corr(g1, (Insertion(i, l - 1 - m),) + left),
                                Corr(g2, (Insertion(j, m),) + right)], gs)


def _leibniz(expr: CorrelatorExpression, on_corr) -> CorrelatorExpression:
    out = CorrelatorExpression()
    for (gsums, factors), c in expr.terms.items():
        for pos, f in enumerate(factors):
            if not isinstance(f, Corr):
                continue
            rest = factors[:pos] + factors[pos + 1:]
            for item in on_corr(f):
                scalar, atoms, repl, *extra = item
                new_gsums = tuple(gsums) + (tuple(extra[0]) if extra else ())
                out.add_term(c * scalar, list(atoms) + list(rest) + list(repl), new_gsums)
    return out


def apply_s_action(expr: CorrelatorExpression, s: Family, cutoff: int) -> CorrelatorExpression:
    """Derivative along a lower-triangular generator ``s(z^-1) = sum s_l z^-l``.

    Per correlator: the q-shift term (q indices up to ``cutoff``), the
    descendent-lowering terms, and for genus-0 two-point correlators the
    scalar term ``((-1)^k1 (s_{k1+k2+1})_{i1 i2} + (-1)^k2 (s_{k1+k2+1})_{i2 i1}) / 2``.
    A symbolic genus is treated as positive.  Acts on products by Leibniz.
    """
    return _leibniz(expr, lambda c: _s_on_correlator(c, s, cutoff))


def apply_r_action(expr: CorrelatorExpression, r: Family, cutoff: int) -> CorrelatorExpression:
    """Derivative along an upper-triangular generator ``r(z) = sum r_l z^l``.

    Per correlator: q-shift (q indices up to ``cutoff``), descendent-raising,
    genus reduction (absent in genus 0) and genus splitting with the original
    insertions distributed over both factors in all ways.  Leibniz on products.
    """
    return _leibniz(expr, lambda c: _r_on_correlator(c, r, cutoff))


# -- finite-rank evaluation -----------------------------------------------------------


def expand(expr: CorrelatorExpression, dim: int) -> CorrelatorExpression:
    """Replace every bound label by a sum over the basis ``0..dim-1`` and
    every genus sum with an integer upper bound by its terms."""
    out = CorrelatorExpression()
    for (gsums, factors), c in expr.terms.items():
        labels = sorted({l for f in factors for l in f.labels() if is_bound(l)})
        for gvals in _genus_assignments(gsums):
            gmap_factors = [_subst_genus(f, gvals) for f in factors]
            if _has_negative_genus(gmap_factors):
                continue
            for values in itertools.product(range(dim), repeat=len(labels)):
                lmap = dict(zip(labels, values))
                _, fs = _relabel((), gmap_factors, lmap, {})
                out.add_term(c, fs)
    return out


def _genus_assignments(gsums):
    if not gsums:
        yield {}
        return
    pending = list(gsums)
    # resolve sums in dependency order
    def rec(assigned, remaining):
        if not remaining:
            yield dict(assigned)
            return
        for idx, (v, up) in enumerate(remaining):
            up2 = up.substitute(assigned)
            if up2.is_int():
                rest = remaining[:idx] + remaining[idx + 1:]
                for h in range(up2.value() + 1):
                    assigned[v] = h
                    yield from rec(assigned, rest)
                    del assigned[v]
                return
        raise ValueError("genus sums with symbolic bounds cannot be expanded")
    yield from rec({}, pending)


def _has_negative_genus(factors) -> bool:
    return any(isinstance(f, Corr) and f.genus.is_int() and f.genus.value() < 0 for f in factors)


def substitute_genus(expr: CorrelatorExpression, values: Mapping[str, int]) -> CorrelatorExpression:
    """Specialize free genus symbols; terms acquiring a negative genus vanish."""
    out = CorrelatorExpression()
    for (gsums, factors), c in expr.terms.items():
        fs = [_subst_genus(f, values) for f in factors]
        if _has_negative_genus(fs):
            continue
        out.add_term(c, fs, tuple((v, up.substitute(values)) for v, up in gsums))
    return out


def rename_labels(expr: CorrelatorExpression, mapping: Mapping[Label, Label]) -> CorrelatorExpression:
    """Rename free labels, e.g. ``{"y": 0}`` or ``{"m": "#m"}`` to contract a pair."""
    out = CorrelatorExpression()
    for (gsums, factors), c in expr.terms.items():
        _, fs = _relabel((), factors, {k: v for k, v in mapping.items() if not is_bound(k)}, {})
        out.add_term(c, fs, gsums)
    return out


def _subst_genus(f: Factor, values: Mapping[str, int]) -> Factor:
    if isinstance(f, Corr) and values:
        return Corr(f.genus.substitute(values), f.ins)
    return f


def evaluate(expr: CorrelatorExpression,
             correlators: Callable[[int, tuple], Number],
             q: Mapping[tuple, Number] | Callable[[int, int], Number] = None,
             families: Iterable[Family] = ()) -> GaussRational:
    """Numeric value of a fully concrete expression.

    ``correlators(genus, insertions)`` supplies the value of each symbol
    (negative genera are zero and never queried); ``q`` gives ``q^i_n``;
    numeric ``families`` supply values for any remaining atoms.
    """
    fams = {f.name: f for f in families}
    qget = q if callable(q) else (lambda i, n: (q or {}).get((i, n), 0))
    total = ZERO
    for (gsums, factors), c in expr.terms.items():
        if gsums:
            raise ValueError("expand() genus sums before evaluating")
        val = c
        for f in factors:
            if isinstance(f, Corr):
                g = f.genus.value()
                if g < 0:
                    val = ZERO
                    break
                val = val * gauss(correlators(g, f.ins))
            elif isinstance(f, QVar):
                if not isinstance(f.label, int):
                    raise ValueError("expand() bound labels before evaluating")
                val = val * gauss(qget(f.label, f.n))
            else:
                fam = fams.get(f.family)
                if fam is None or fam.values is None:
                    raise ValueError(f"no numeric values for family {f.family!r}")
                e = fam.entry(f.level, f.a, f.b)
                val = val * (e[0] if e else ZERO)
            if not val:
                break
        total = total + val
    return total


def substitute_family(expr: CorrelatorExpression, fam: Family) -> CorrelatorExpression:
    """Replace the atoms of ``fam`` by their numeric values (labels must be concrete)."""
    out = CorrelatorExpression()
    for (gsums, factors), c in expr.terms.items():
        val, keep = c, []
        for f in factors:
            if isinstance(f, Coef) and f.family == fam.name:
                e = fam.entry(f.level, f.a, f.b)
                if e is None:
                    val = ZERO
                    break
                val = val * e[0]
            else:
                keep.append(f)
        if val:
            out.add_term(val, keep, gsums)
    return out
