"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 on usage or configuration errors.  JSON output carries ``"schema": 1``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable

from . import bounds, p1, weyl
from .correlators import Family, apply_r_action, apply_s_action, descendent_to_ancestor, kappa_pushforward, parse_expression

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _matrix_text(m) -> str:
    return "[" + ", ".join("[" + ", ".join(str(x) for x in row) + "]" for row in m.rows()) + "]"


# -- subcommands: each returns (exit code, json payload, text) ----------------


def cmd_rmatrix(args):
    if args.R:
        top = args.max_n if args.max_n is not None else 5
        if top < 0:
            raise UsageError("--max-n must be >= 0")
        items = [(n, p1.compute_R(n).matrix) for n in range(top + 1)]
        name, key = "R", "n"
    else:
        top = args.max_l if args.max_l is not None else 5
        if top < 1:
            raise UsageError("--max-l must be >= 1")
        trunc = _trunc(args, top)
        series = p1.r_series(trunc)
        items = [(l, series[l]) for l in range(1, top + 1)]
        name, key = "r", "l"
    payload = {"kind": name, "matrices": [{key: i, "matrix": m.to_json()} for i, m in items]}
    text = "\n".join(f"{name}_{i} = {_matrix_text(m)}" for i, m in items)
    return EXIT_OK, payload, text


def _trunc(args, max_l: int) -> int:
    if args.trunc is None:
        return max_l
    if args.trunc < max_l:
        raise UsageError("--trunc must be >= --max-l")
    return args.trunc


def _workers() -> int | None:
    raw = os.environ.get("ENGINE_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ENGINE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("ENGINE_THREADS must be a positive integer")
    return n


def cmd_certify(args):
    if args.max_l < 1:
        raise UsageError("--max-l must be >= 1")
    _trunc(args, args.max_l)
    report = p1.certify_nonvanishing(args.max_l, workers=_workers())
    lines = []
    for c in report.per_l:
        vals = ", ".join(f"{k}={v}" for k, v in c.entries.items())
        lines.append(f"l={c.l:<3} {str(c.shape):<5} {'ok' if c.passed else 'FAIL'}  {vals}")
    lines.append(f"overall: {'pass' if report.passed else 'fail'}")
    return (EXIT_OK if report.passed else EXIT_FAIL), report.to_json(), "\n".join(lines)


def cmd_bounds(args):
    if args.max_n < 9:
        raise UsageError("--max-n must be >= 9")
    reports = bounds.bounds_report(args.max_n)
    ok = all(r.passed for r in reports)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  [{r.lemma}] {r.statement}  ({r.checked}; "
             f"margin {float(r.margin):.4g} at {r.witness})" for r in reports]
    lines.append(f"overall: {'pass' if ok else 'fail'}")
    payload = {"overall": "pass" if ok else "fail", "reports": [r.to_json() for r in reports]}
    return (EXIT_OK if ok else EXIT_FAIL), payload, "\n".join(lines)


def cmd_kpoly(args):
    if not args.ks:
        raise UsageError("kpoly needs at least one index")
    poly = kappa_pushforward(args.ks)
    payload = {
        "ks": args.ks,
        "terms": [{"kappa": list(m), "coeff": c} for m, c in sorted(poly.terms.items())],
        "text": str(poly),
    }
    return EXIT_OK, payload, str(poly)


def _parse_tail(text: str | None):
    if not text:
        return []
    out = []
    for chunk in text.split("|"):
        parts = chunk.split()
        if len(parts) != 2:
            raise UsageError(f"tail insertion {chunk!r} must be 'k label'")
        k, label = parts
        out.append((int(k), int(label) if label.lstrip("-").isdigit() else label))
    return out


def cmd_translate(args):
    expr = descendent_to_ancestor(args.k, args.lbar, args.r, _parse_tail(args.tail), args.genus, args.label)
    return EXIT_OK, {"expression": str(expr), "terms": len(expr)}, str(expr)


def _variable_pair(text: str, kind: str):
    pieces = text.split(":")
    if len(pieces) == 1:
        pieces = pieces * 2  # one variable means its square
    if len(pieces) != 2:
        raise UsageError(f"--{kind * 2} takes 'i,k' or 'i,k:j,l'")
    out = []
    for piece in pieces:
        try:
            i, k = (int(x) for x in piece.split(","))
        except ValueError:
            raise UsageError(f"bad variable {piece!r}; expected 'i,k'") from None
        if i < 0 or k < 0:
            raise UsageError("indices must be non-negative")
        out.append(weyl.Var(kind, i, k))
    return out


def cmd_cocycle(args):
    a = _variable_pair(args.pp, "p")
    b = _variable_pair(args.qq, "q")
    P1 = weyl.DarbouxPolynomial({tuple(sorted(a)): 1})
    P2 = weyl.DarbouxPolynomial({tuple(sorted(b)): 1})
    if args.swap:
        P1, P2 = P2, P1
    c = weyl.cocycle(P1, P2)
    expected = weyl.cocycle_formula(P1, P2)
    if not c.is_scalar():
        return EXIT_FAIL, {"value": None, "error": "cocycle is not central", "operator": c.to_json()}, \
            "cocycle is not a scalar: " + str(c)
    value = c.scalar_value()
    ok = value == expected
    payload = {"P1": str(P1), "P2": str(P2), "value": str(value), "formula": str(expected), "agrees": ok}
    return (EXIT_OK if ok else EXIT_FAIL), payload, str(value)


def cmd_act(args):
    expr = parse_expression(args.expression)
    levels = [int(x) for x in args.levels.split(",") if x]
    if not levels or any(l < 1 for l in levels):
        raise UsageError("--levels must list positive integers")
    fam = Family.symbolic(args.family, levels)
    act = apply_r_action if args.family == "r" else apply_s_action
    out = act(expr, fam, cutoff=args.cutoff)
    return EXIT_OK, {"input": str(expr), "expression": str(out), "terms": len(out)}, str(out)


# -- plumbing -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="givental", description="Exact checks for the P1 R-matrix and Givental quantization.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("rmatrix", help="print R_n or r_l = log R")
    which = p.add_mutually_exclusive_group()
    which.add_argument("--r", action="store_true", help="coefficients of log R (default)")
    which.add_argument("--R", action="store_true", help="coefficients of R")
    p.add_argument("--max-l", type=int)
    p.add_argument("--max-n", type=int)
    p.add_argument("--trunc", type=int)
    _common(p)
    p.set_defaults(func=cmd_rmatrix)

    p = sub.add_parser("certify", help="certify shape and non-vanishing of r_l")
    p.add_argument("--max-l", type=int, required=True)
    p.add_argument("--trunc", type=int)
    _common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bounds", help="finite-range inequality checks")
    p.add_argument("--max-n", type=int, default=50)
    _common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("kpoly", help="kappa pushforward polynomial")
    p.add_argument("ks", type=int, nargs="*")
    _common(p)
    p.set_defaults(func=cmd_kpoly)

    p = sub.add_parser("translate", help="descendent to ancestor translation")
    p.add_argument("k", type=int)
    p.add_argument("lbar", type=int)
    p.add_argument("r", type=int)
    p.add_argument("--genus", default="g")
    p.add_argument("--label", default="x")
    p.add_argument("--tail", help="further insertions, e.g. '1 y|0 z'")
    _common(p)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("cocycle", help="central defect [P1^, P2^] - {P1, P2}^ on monomials")
    p.add_argument("--pp", required=True, help="'i,k' (square) or 'i,k:j,l'")
    p.add_argument("--qq", required=True, help="'i,k' (square) or 'i,k:j,l'")
    p.add_argument("--swap", action="store_true", help="use P1 = qq, P2 = pp")
    _common(p)
    p.set_defaults(func=cmd_cocycle)

    p = sub.add_parser("act", help="apply a symbolic r- or s-action to a correlator expression")
    p.add_argument("family", choices=("r", "s"))
    p.add_argument("expression")
    p.add_argument("--levels", default="1")
    p.add_argument("--cutoff", type=int, default=2)
    _common(p)
    p.set_defaults(func=cmd_act)
    return parser


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        func: Callable = args.func
        code, payload, text = func(args)
    except UsageError as exc:
        print(f"givental: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"givental: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "json":
        doc = {"schema": SCHEMA, "command": args.command, "status": "pass" if code == EXIT_OK else "fail"}
        doc.update(payload)
        body = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        body = text + "\n"
    try:
        _emit(body, args.out)
    except OSError as exc:
        print(f"givental: error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
