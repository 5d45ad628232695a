"""Command-line interface.

Subcommands: solve (run one of the three path algorithms), eval (tabulate a
stored path as CSV, optionally rendering a component figure), check (verify
a stored path against its instance), fixtures (built-in end-to-end checks),
and gen (write seeded random instances to disk).

Exit codes are a stable contract:
  0  success / path reached zero / verification passed
  1  I/O errors, parse errors, dimension or consistency mismatches
  2  sign inconsistency reported by the single-support algorithm
  3  iteration or loop caps hit
  4  verification failure (report still written)
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fixtures as fixture_registry
from .directions import DirectionSolverError
from .formats import ParseError, read_matrix, read_vector, write_matrix_market, write_vector
from .homotopy import ALGORITHMS, HomotopyConfig, LoopCapExceeded, solve_path
from .model import (
    ITERATION_CAP,
    REACHED_ZERO,
    SIGN_INCONSISTENCY,
    PathFormatError,
    ProblemInstance,
    Tolerances,
    interpolate_kinks,
    path_from_json_dict,
)
from .oracle import verify_path

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SIGN_INCONSISTENCY = 2
EXIT_CAP = 3
EXIT_VERIFY_FAILED = 4


def _add_instance_arguments(parser):
    parser.add_argument("--matrix", help="matrix file (Matrix Market or CSV)")
    parser.add_argument("--rhs", help="data vector file (floats, one per line or CSV)")
    parser.add_argument(
        "--fixture",
        choices=sorted(fixture_registry.FIXTURE_INSTANCES),
        help="use a built-in instance instead of files",
    )
    parser.add_argument(
        "--gen",
        choices=fixture_registry.INSTANCE_KINDS,
        help="generate a seeded random instance instead of reading files",
    )
    parser.add_argument("--m", type=int, help="rows for --gen")
    parser.add_argument("--n", type=int, help="columns for --gen")
    parser.add_argument("--seed", type=int, default=0, help="seed for --gen and sampling")


def _load_instance(args) -> ProblemInstance:
    if args.fixture:
        return fixture_registry.FIXTURE_INSTANCES[args.fixture]()
    if args.gen:
        if args.m is None or args.n is None:
            raise ParseError("--gen requires --m and --n")
        return fixture_registry.generate_instance(args.gen, args.m, args.n, args.seed)
    if not args.matrix or not args.rhs:
        raise ParseError("provide --matrix and --rhs, or --fixture, or --gen")
    A = read_matrix(args.matrix)
    f = read_vector(args.rhs)
    return ProblemInstance(A, f)


def _tolerances(args) -> Tolerances:
    return Tolerances(
        eq_tol=args.eq_tol,
        kkt_tol=args.kkt_tol,
        max_iters=args.max_iters,
    )


def _cmd_solve(args) -> int:
    inst = _load_instance(args)
    cfg = HomotopyConfig(
        algorithm=args.algorithm,
        tolerances=_tolerances(args),
        loop_cap=args.loop_cap,
    )
    try:
        path = solve_path(inst, cfg)
    except LoopCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(path.to_json())
    term = path.termination
    if term.kind == SIGN_INCONSISTENCY:
        print(
            f"sign inconsistency: index {term.index} at t={term.t!r}",
            file=sys.stderr,
        )
        return EXIT_SIGN_INCONSISTENCY
    if term.kind == ITERATION_CAP:
        print("iteration cap hit before reaching t=0", file=sys.stderr)
        return EXIT_CAP
    print(f"path with {len(path.kinks)} kinks written to {args.out}")
    return EXIT_OK


def _load_raw_kinks(path_file):
    with open(path_file, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    kinks = obj["kinks"]
    if not kinks:
        raise PathFormatError("path has no kinks")
    ts = np.array([float(k["t"]) for k in kinks])
    us = np.array([[float(x) for x in k["u"]] for k in kinks])
    if us.ndim != 2 or us.shape[0] != ts.shape[0]:
        raise PathFormatError("kink solutions are inconsistent")
    if np.any(np.diff(ts) >= 0):
        raise PathFormatError("kink parameters must be strictly decreasing")
    return obj, ts, us


def _cmd_eval(args) -> int:
    _, ts, us = _load_raw_kinks(args.path)
    if args.t is not None:
        grid = [args.t]
    else:
        grid = list(ts)
        t0 = ts[0]
        positive = ts[ts > 0]
        if args.grid > 0 and positive.size and t0 > 0:
            lo = positive.min()
            if lo < t0:
                grid.extend(np.geomspace(t0, lo, args.grid))
        grid = sorted(set(float(t) for t in grid), reverse=True)
    rows = []
    for t in grid:
        u, _ = interpolate_kinks(ts, us, t)
        rows.append((t, u))
    writer = sys.stdout
    writer.write("t," + ",".join(f"u_{i + 1}" for i in range(us.shape[1])) + "\n")
    for t, u in rows:
        writer.write(",".join(repr(float(v)) for v in (t, *u)) + "\n")
    if args.plot:
        from .plotting import save_component_plot

        save_component_plot(
            [t for t, _ in rows],
            np.stack([u for _, u in rows]),
            args.plot,
            kink_ts=ts,
        )
        print(f"component plot written to {args.plot}", file=sys.stderr)
    return EXIT_OK


def _cmd_check(args) -> int:
    inst = _load_instance(args)
    with open(args.path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    path = path_from_json_dict(obj, inst)
    report = verify_path(
        inst,
        path,
        n_samples=args.samples,
        kkt_threshold=args.tol,
        gap_tol=args.gap_tol,
        seed=args.seed,
    )
    json.dump(report.to_json_dict(), sys.stdout)
    sys.stdout.write("\n")
    if not report.passed:
        print(f"verification failed, worst t={report.worst_t!r}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    if args.list:
        for name in sorted(fixture_registry.FIXTURES):
            print(name)
        return EXIT_OK
    if not args.run:
        print("error: use --list or --run NAME", file=sys.stderr)
        return EXIT_ERROR
    runner = fixture_registry.FIXTURES.get(args.run)
    if runner is None:
        print(f"error: unknown fixture {args.run!r}", file=sys.stderr)
        return EXIT_ERROR
    if args.run == "infinite-kinks-adversarial":
        checks = runner(args.max_kinks)
        from .homotopy import adversarial_demo

        ts = adversarial_demo(args.max_kinks).kink_ts
        print("kinks: " + ", ".join(repr(float(t)) for t in ts))
    else:
        checks = runner()
    ok = True
    for check in checks:
        status = "PASS" if check.ok else "FAIL"
        detail = f"  ({check.detail})" if check.detail else ""
        print(f"{status}: {check.name}{detail}")
        ok = ok and check.ok
    return EXIT_OK if ok else EXIT_ERROR


def _cmd_gen(args) -> int:
    inst = fixture_registry.generate_instance(args.kind, args.m, args.n, args.seed)
    comment = f"kind={args.kind} m={args.m} n={args.n} seed={args.seed}"
    write_matrix_market(args.out_matrix, inst.A, comment)
    write_vector(args.out_rhs, inst.f)
    print(f"wrote {args.out_matrix} and {args.out_rhs} ({comment})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lassopath",
        description="Complete piecewise-linear lasso solution paths.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute a solution path")
    _add_instance_arguments(p_solve)
    p_solve.add_argument(
        "--algorithm", choices=ALGORITHMS, default="generalized",
        help="path algorithm (default: generalized)",
    )
    p_solve.add_argument("--out", required=True, help="output path JSON file")
    p_solve.add_argument("--eq-tol", type=float, default=Tolerances().eq_tol)
    p_solve.add_argument("--kkt-tol", type=float, default=Tolerances().kkt_tol)
    p_solve.add_argument("--max-iters", type=int, default=Tolerances().max_iters)
    p_solve.add_argument("--loop-cap", type=int, default=20)
    p_solve.set_defaults(func=_cmd_solve)

    p_eval = sub.add_parser("eval", help="tabulate a stored path as CSV")
    p_eval.add_argument("--path", required=True, help="path JSON file")
    group = p_eval.add_mutually_exclusive_group(required=True)
    group.add_argument("--t", type=float, help="evaluate at a single parameter")
    group.add_argument("--grid", type=int, help="log-spaced grid size (plus all kinks)")
    p_eval.add_argument("--plot", help="also render a component figure to this file")
    p_eval.set_defaults(func=_cmd_eval)

    p_check = sub.add_parser("check", help="verify a stored path")
    _add_instance_arguments(p_check)
    p_check.add_argument("--path", required=True, help="path JSON file")
    p_check.add_argument("--samples", type=int, default=100)
    p_check.add_argument("--tol", type=float, default=1e-7,
                         help="optimality residual threshold")
    p_check.add_argument("--gap-tol", type=float, default=1e-6,
                         help="objective gap threshold, relative to 1 + 0.5*||f||^2")
    p_check.set_defaults(func=_cmd_check)

    p_fix = sub.add_parser("fixtures", help="run built-in end-to-end checks")
    p_fix.add_argument("--list", action="store_true", help="list fixture names")
    p_fix.add_argument("--run", help="run one fixture by name")
    p_fix.add_argument("--max-kinks", type=int, default=8,
                       help="kinks to replay in the adversarial demo")
    p_fix.set_defaults(func=_cmd_fixtures)

    p_gen = sub.add_parser("gen", help="write a seeded random instance to disk")
    p_gen.add_argument("--kind", choices=fixture_registry.INSTANCE_KINDS, required=True)
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out-matrix", required=True)
    p_gen.add_argument("--out-rhs", required=True)
    p_gen.set_defaults(func=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, PathFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except DirectionSolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
