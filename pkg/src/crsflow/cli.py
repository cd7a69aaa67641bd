"""Command line: ``crsflow run | bench | synth``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import run_benchmark, write_csv
from .caseio import CaseFormatError, CaseValidationError, load_case, serialize_case_json
from .solver import Init, SingularMatrixError, SolveOptions, SolverPath, newton_raphson
from .synth import synth_grid

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2


def _load(path: str):
    try:
        return load_case(path)
    except OSError as e:
        print(f"error: cannot read {path}: {e.strerror or e}", file=sys.stderr)
    except (CaseFormatError, CaseValidationError) as e:
        print(f"error: {path}: {e}", file=sys.stderr)
    return None


def cli_run(args) -> int:
    case = _load(args.case)
    if case is None:
        return EXIT_INPUT
    opts = SolveOptions(tol=args.tol, max_iter=args.max_iter, init=Init(args.init),
                        path=SolverPath(args.path))
    try:
        res = newton_raphson(case, opts)
    except SingularMatrixError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    va_deg = np.rad2deg(res.va)
    if args.json:
        doc = {
            "converged": res.converged,
            "iterations": res.iterations,
            "max_mismatch": res.max_mismatch,
            "buses": [{"id": bid, "vm": float(vm), "va_deg": float(va)}
                      for bid, vm, va in zip(case.bus_ids, res.vm, va_deg)],
            "timings_ms": {k: v * 1e3 for k, v in res.timings.items()},
            "visits": res.visits,
        }
        print(json.dumps(doc, indent=1))
    else:
        print(f"converged: {res.converged}  iterations: {res.iterations}  "
              f"max mismatch: {res.max_mismatch:.3e} p.u.")
        print(f"{'bus':>8} {'vm [p.u.]':>12} {'va [deg]':>12}")
        for bid, vm, va in zip(case.bus_ids, res.vm, va_deg):
            print(f"{bid:>8d} {vm:>12.6f} {va:>12.6f}")
    return EXIT_OK if res.converged else EXIT_DIVERGED


def cli_bench(args) -> int:
    case = _load(args.case)
    if case is None:
        return EXIT_INPUT
    paths = [SolverPath.FUSED_DIRECT, SolverPath.GENERIC] if args.path == "both" \
        else [SolverPath(args.path)]
    name = Path(args.case).stem
    try:
        reports = [run_benchmark(case, p, args.runs, case_name=name) for p in paths]
    except SingularMatrixError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    text = write_csv(reports, args.csv)
    if args.csv is None:
        sys.stdout.write(text)
    for rep in reports:
        print(f"# {rep.path.value}: visits derivatives={rep.visits['derivatives']} "
              f"jacobian={rep.visits['jacobian']} over {rep.iterations} iterations "
              f"(nnz(Y)={rep.nnz_y}); min derivatives+jacobian "
              f"{rep.construction_min * 1e3:.4f} ms", file=sys.stderr)
    return EXIT_OK


def cli_synth(args) -> int:
    try:
        case = synth_grid(args.buses, args.degree, args.pv_frac, args.seed)
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = serialize_case_json(case)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crsflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve one case")
    r.add_argument("case")
    r.add_argument("--tol", type=float, default=1e-8)
    r.add_argument("--max-iter", type=int, default=10)
    r.add_argument("--init", choices=["flat", "case"], default="flat")
    r.add_argument("--path", choices=["fused", "generic"], default="fused")
    fmt = r.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--table", action="store_true", help="plain table (default)")
    r.set_defaults(func=cli_run)

    b = sub.add_parser("bench", help="min-of-R timing of both Jacobian paths")
    b.add_argument("case")
    b.add_argument("--runs", type=int, default=100)
    b.add_argument("--path", choices=["fused", "generic", "both"], default="both")
    b.add_argument("--csv", default=None, metavar="OUT")
    b.set_defaults(func=cli_bench)

    s = sub.add_parser("synth", help="write a random connected grid as JSON")
    s.add_argument("--buses", type=int, required=True)
    s.add_argument("--degree", type=float, default=3.0)
    s.add_argument("--pv-frac", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cli_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
