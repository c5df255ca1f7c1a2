"""Command-line surface: apply, verify, table, corpus.

Exit codes: 0 pass/success, 1 verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .canon import expr_equal, expr_equal_mod_constants, normalize
from .lang import SyntaxErrorAt, format_expr, parse_expr
from .numeric import TestFunction, verify_identity
from .ops import CATALOG, OpResult, apply, fix_constants
from .scalars import Lambda


def default_suite(m: int, n: int) -> list[TestFunction]:
    """Deterministic Gaussian-times-polynomial test suite."""
    monos = [(0,) * m]
    monos.append((1,) + (0,) * (m - 1))
    monos.append((2,) + (0,) * (m - 1))
    if m >= 2:
        monos.append((1, 1) + (0,) * (m - 2))
        monos.append((2, 1) + (0,) * (m - 2))
        monos.append((3, 0) + (0,) * (m - 2))
        monos.append((2, 2) + (0,) * (m - 2))
    widths = [Fraction(1), Fraction(2), Fraction(1, 2)]
    out = []
    for i in range(n):
        out.append(TestFunction.monomial(
            m, monos[i % len(monos)], s=widths[i % len(widths)]))
    return out


def _parse_or_exit(text: str, m: int, mode):
    try:
        return parse_expr(text, m, mode)
    except SyntaxErrorAt as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        raise SystemExit(2)


def cmd_apply(args) -> int:
    mode = "generic" if args.generic else None
    e = _parse_or_exit(args.expr, args.m, mode)
    if args.fix_constants:
        e = fix_constants(OpResult(e))
    out = format_expr(e, style=args.style)
    if not e.exclusions.is_empty():
        out += f"  [lambda not in {e.exclusions}]"
    print(out)
    return 0


def cmd_verify(args) -> int:
    if args.eq != "==":
        print("usage: verify EXPR == EXPR", file=sys.stderr)
        return 2
    mode = "generic" if args.generic else None
    lhs = _parse_or_exit(args.lhs, args.m, mode)
    rhs = _parse_or_exit(args.rhs, args.m, mode)
    ok = expr_equal(lhs, rhs) or expr_equal_mod_constants(lhs, rhs)
    print(f"symbolic: {'pass' if ok else 'FAIL'}")
    if not ok:
        print(f"  lhs = {format_expr(lhs)}")
        print(f"  rhs = {format_expr(rhs)}")
    if ok and args.numeric:
        if lhs.free_symbols() or rhs.free_symbols():
            print("numeric: skipped (free constants present)")
        else:
            report = verify_identity(lhs, rhs,
                                     default_suite(args.m, args.suite),
                                     tol=args.tol)
            print(f"numeric: {'pass' if report.passed else 'FAIL'} "
                  f"(max rel {report.max_rel:.3e})")
            ok = ok and report.passed
    return 0 if ok else 1


def cmd_table(args) -> int:
    lam = args.lam
    e = _parse_or_exit(f"{args.family}({lam})", args.m, None)
    print(f"actions on {args.family}({lam}), m = {args.m}")
    for op_id, op in sorted(CATALOG.items()):
        if op_id in ("vee", "wedge"):
            continue
        try:
            if op.axis:
                res = apply(op_id, e, axis=1)
                label = f"{op_id}[1]"
            else:
                res = apply(op_id, e)
                label = op_id
        except Exception as exc:  # pragma: no cover - catalog is total
            print(f"  {op_id:16s} : error {exc}")
            continue
        txt = format_expr(res.expr)
        if not res.expr.exclusions.is_empty():
            txt += f"  [lambda not in {res.expr.exclusions}]"
        print(f"  {label:16s} : {txt}")
    return 0


def cmd_corpus(args) -> int:
    from .corpus import load_cases, run_cases
    if args.action != "run":
        print("usage: corpus run FILE [--m LIST]", file=sys.stderr)
        return 2
    try:
        cases = load_cases(args.file)
    except OSError as exc:
        print(f"cannot read corpus file: {exc}", file=sys.stderr)
        return 2
    ms = [int(x) for x in args.m.split(",")] if args.m else None
    report = run_cases(cases, ms, verbose=True)
    print(f"{report.passed}/{report.total} cases passed")
    return 0 if report.passed == report.total else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="signumcalc",
        description="symbolic calculus for radial distribution families")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("apply", help="apply an operator expression")
    pa.add_argument("expr")
    pa.add_argument("--m", type=int, required=True)
    pa.add_argument("--generic", action="store_true")
    pa.add_argument("--fix-constants", action="store_true",
                    dest="fix_constants")
    pa.add_argument("--style", choices=("plain", "latex", "structured"),
                    default="plain")
    pa.set_defaults(func=cmd_apply)

    pv = sub.add_parser("verify", help="verify an identity")
    pv.add_argument("lhs")
    pv.add_argument("eq")
    pv.add_argument("rhs")
    pv.add_argument("--m", type=int, required=True)
    pv.add_argument("--generic", action="store_true")
    pv.add_argument("--numeric", action="store_true")
    pv.add_argument("--tol", type=float, default=1e-8)
    pv.add_argument("--suite", type=int, default=5)
    pv.set_defaults(func=cmd_verify)

    pt = sub.add_parser("table", help="print all catalog actions")
    pt.add_argument("--family", choices=("T", "U", "sT", "sU"),
                    required=True)
    pt.add_argument("--lambda", dest="lam", required=True)
    pt.add_argument("--m", type=int, required=True)
    pt.set_defaults(func=cmd_table)

    pc = sub.add_parser("corpus", help="run a golden-identity corpus file")
    pc.add_argument("action")
    pc.add_argument("file")
    pc.add_argument("--m", default=None)
    pc.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except SyntaxErrorAt as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
