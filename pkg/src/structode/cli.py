"""Command line entry point: ``structode <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .analysis import a_stability, butcher_export, dispersion_csv, dispersion_table, find_min_n, transfer_function
from .benchmark import BenchmarkSpec, emit_table, generate_reference, run_benchmark
from .errors import InvalidSpec, StructodeError
from .numerics import get_precision
from .postproc import build_postprocessor
from .problems import get_problem
from .structural import SchemeId, get_basis

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_INVALID = 3


def parse_range(text: str) -> List[int]:
    """'2', '1..3' or '1,2,4'."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise InvalidSpec(f"bad integer range {text!r}") from None


def parse_pairs(text: str):
    """'2:1,3:2' -> ((2, 1), (3, 2))."""
    out = []
    for item in filter(None, text.split(",")):
        try:
            p, ip = item.split(":")
            out.append((int(p), int(ip)))
        except ValueError:
            raise InvalidSpec(f"bad p:I_p pair {item!r}") from None
    return tuple(out)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args) -> int:
    spec = BenchmarkSpec(
        name=args.problem,
        grids=tuple(parse_range(args.grids)),
        scheme=SchemeId(args.k, args.r),
        eps=args.eps,
        precision=args.precision,
        orders=tuple(parse_range(args.orders)) if args.orders else None,
        postproc=parse_pairs(args.post) if args.post else (),
        max_iters=args.max_iters,
        basis_source=args.basis,
    )
    rows = run_benchmark(spec)
    _write(emit_table(rows, args.format), args.out)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NO_CONVERGENCE


def cmd_reference(args) -> int:
    run = None
    if args.k is not None:
        run = (args.k, args.r, args.n)
    path = generate_reference(args.problem, args.precision, run, args.eps)
    print(path)
    return EXIT_OK


def cmd_scheme_dump(args) -> int:
    sid = SchemeId(args.k, args.r, args.s or 0)
    print(get_basis(sid, args.source).dumps())
    return EXIT_OK


def _poly_str(p) -> str:
    return "[" + ", ".join(str(c) for c in p.coeffs) + "]"


def cmd_stability(args) -> int:
    rows = []
    for K in parse_range(args.k):
        for R in parse_range(args.r):
            chi = transfer_function(get_basis(SchemeId(K, R)))
            rep = a_stability(chi)
            rows.append({
                "K": K,
                "R": R,
                "num": [str(c) for c in chi.num.coeffs],
                "den": [str(c) for c in chi.den.coeffs],
                "minors": [str(m) for m in rep.minors],
                "verdict": rep.verdict,
            })
    if args.format == "json":
        print(json.dumps(rows, indent=1))
    else:
        for r in rows:
            print(f"K={r['K']} R={r['R']} {r['verdict']} num={r['num']} minors={r['minors']}")
    return EXIT_OK


def cmd_dispersion(args) -> int:
    n = args.samples
    omegas = [args.omega_max * (i + 1) / n for i in range(n)]
    schemes = [(K, R) for K in parse_range(args.k) for R in parse_range(args.r)]
    rows = dispersion_table(schemes, omegas, parse_range(args.ell), get_precision(args.precision))
    _write(dispersion_csv(rows), args.out)
    return EXIT_OK


def cmd_postproc(args) -> int:
    print(build_postprocessor(args.k, args.p, args.ip, args.d).dumps())
    return EXIT_OK


def cmd_butcher(args) -> int:
    print(butcher_export(get_basis(SchemeId(args.k, args.r))).dumps())
    return EXIT_OK


def cmd_minn(args) -> int:
    N = find_min_n(get_problem(args.problem), SchemeId(args.k, args.r), args.target, args.eps, args.precision)
    print(N)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="structode", description="Structural block ODE schemes")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="convergence table for a named problem")
    b.add_argument("--problem", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--r", type=int, required=True)
    b.add_argument("--grids", required=True, help="comma-separated N values")
    b.add_argument("--eps", type=float, default=1e-14)
    b.add_argument("--precision", default="double")
    b.add_argument("--format", default="csv", choices=["csv", "markdown"])
    b.add_argument("--orders", help="derivative orders to report, e.g. 0..2")
    b.add_argument("--post", help="post-processed derivatives as p:I_p pairs")
    b.add_argument("--max-iters", type=int, default=200)
    b.add_argument("--basis", default="exact_kernel")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    ref = sub.add_parser("reference", help="generate the cached self-reference trace")
    ref.add_argument("--problem", required=True)
    ref.add_argument("--precision", default="double")
    ref.add_argument("--k", type=int)
    ref.add_argument("--r", type=int)
    ref.add_argument("--n", type=int)
    ref.add_argument("--eps", type=float)
    ref.set_defaults(func=cmd_reference)

    sc = sub.add_parser("scheme", help="structural bases")
    scs = sc.add_subparsers(dest="action", required=True)
    d = scs.add_parser("dump", help="print the basis as JSON")
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--r", type=int, required=True)
    d.add_argument("--s", type=int)
    d.add_argument("--source", default="exact_kernel")
    d.set_defaults(func=cmd_scheme_dump)

    st = sub.add_parser("stability", help="transfer functions and Hurwitz verdicts")
    st.add_argument("--k", default="1..3")
    st.add_argument("--r", default="1..3")
    st.add_argument("--format", default="text", choices=["text", "json"])
    st.set_defaults(func=cmd_stability)

    dp = sub.add_parser("dispersion", help="zeta samples as CSV")
    dp.add_argument("--k", default="1..4")
    dp.add_argument("--r", default="1..4")
    dp.add_argument("--ell", default="1")
    dp.add_argument("--omega-max", type=float, default=2 * math.pi)
    dp.add_argument("--samples", type=int, default=128)
    dp.add_argument("--precision", default="double")
    dp.add_argument("--out")
    dp.set_defaults(func=cmd_dispersion)

    pp = sub.add_parser("postproc", help="post-processing formula as JSON")
    pp.add_argument("--k", type=int, required=True)
    pp.add_argument("--p", type=int, required=True)
    pp.add_argument("--ip", type=int, required=True)
    pp.add_argument("--d", type=int)
    pp.set_defaults(func=cmd_postproc)

    bt = sub.add_parser("butcher", help="Runge-Kutta tableau as JSON")
    bt.add_argument("--k", type=int, required=True)
    bt.add_argument("--r", type=int, required=True)
    bt.set_defaults(func=cmd_butcher)

    mn = sub.add_parser("minn", help="smallest grid reaching a final-error target")
    mn.add_argument("--problem", required=True)
    mn.add_argument("--k", type=int, required=True)
    mn.add_argument("--r", type=int, required=True)
    mn.add_argument("--target", type=float, required=True)
    mn.add_argument("--eps", type=float, default=1e-14)
    mn.add_argument("--precision", default="double")
    mn.set_defaults(func=cmd_minn)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except InvalidSpec as exc:
        print(f"structode: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StructodeError as exc:
        print(f"structode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
