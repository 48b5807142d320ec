"""Command-line drivers.

Subcommands: ``one-level``, ``two-level``, ``cavity``, ``convergence`` and
``scaling``.  Results go to ``--out`` as ``stats.json`` plus CSV data:

* ``field.csv``: ``x,y,psi,u,v`` over the sample grid, x fastest
* ``profile_u.csv``: ``y,u`` along ``x = 0.5`` (cavity only)
* ``profile_v.csv``: ``x,v`` along ``y = 0.5`` (cavity only)
* ``table.csv`` / ``rates.csv``: convergence tables

Exit status is 0 on success, 1 on solver failure and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .mesh import build_uniform
from .problems import (
    CavityProblem,
    ManufacturedProblem,
    error_norms,
    sample_field,
    velocity_profile,
)
from .solvers import (
    ElementKind,
    LinearSolveError,
    NewtonConfig,
    NewtonError,
    RunStats,
    TwoLevelConfig,
    scaling_h_for_H,
    scaling_lhs,
    solve_one_level,
    solve_two_level,
)
from .space import DiscreteField, make_space
from .sparse import SolverConfig

log = logging.getLogger("twolevel_sf")

STATS_SCHEMA = {
    "type": "object",
    "required": ["method", "re", "coarse_h", "fine_h", "newton_iters",
                 "bicgstab_iters_coarse", "bicgstab_iters_fine", "residual",
                 "errors", "free_dofs", "wall_seconds"],
    "properties": {
        "method": {"enum": ["one-level", "two-level"]},
        "re": {"type": "number", "exclusiveMinimum": 0},
        "coarse_h": {"type": ["number", "null"]},
        "fine_h": {"type": "number"},
        "newton_iters": {"type": "integer", "minimum": 0},
        "fine_newton_iters": {"type": "integer", "minimum": 0},
        "bicgstab_iters_coarse": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "bicgstab_iters_fine": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "residual": {"type": ["number", "null"]},
        "errors": {
            "oneOf": [
                {"type": "null"},
                {"type": "object", "required": ["l2", "h1", "h2"],
                 "properties": {k: {"type": "number", "minimum": 0}
                                for k in ("l2", "h1", "h2")}},
            ]
        },
        "free_dofs": {"type": "object",
                      "additionalProperties": {"type": "integer", "minimum": 0}},
        "wall_seconds": {"type": "number", "minimum": 0},
        "converged": {"type": "boolean"},
    },
}

FIELD_HEADER = ["x", "y", "psi", "u", "v"]


class SolverFailure(Exception):
    pass


# ---------------------------------------------------------------- parsing

def positive_float(text):
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return value


def comma_list(kind):
    def parse(text):
        return [kind(t) for t in text.split(",") if t.strip()]
    return parse


def _common(p, nx_flag="--nx", nx_default=8):
    p.add_argument(nx_flag, dest="n", type=positive_int, default=nx_default,
                   help="elements per side" if nx_flag == "--nx" else "coarse elements per side")
    p.add_argument("--re", type=positive_float, default=10.0, help="Reynolds number")
    p.add_argument("--tol", type=positive_float, default=1e-3, help="Newton tolerance")
    p.add_argument("--lin-tol", type=positive_float, default=1e-8,
                   help="BiCGSTAB relative residual tolerance")
    p.add_argument("--precond", choices=["none", "jacobi"], default="jacobi")
    p.add_argument("--quad", type=positive_int, default=4, help="Gauss points per axis")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--continuation", type=comma_list(positive_float), default=None,
                   help="increasing Reynolds ramp ending at --re")
    p.add_argument("--initial", choices=["stokes", "zero"], default="stokes")
    p.add_argument("--max-newton", type=positive_int, default=25)
    p.add_argument("--samples", type=positive_int, default=33,
                   help="field samples per side")
    p.add_argument("--seminorm", action="store_true",
                   help="report H1/H2 seminorms instead of full norms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twolevel-sf",
        description="Stream-function Navier-Stokes: one-level and two-level BFS solvers")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("one-level", help="Newton on a single mesh (manufactured flow)")
    _common(p)
    p.add_argument("--f", choices=["manufactured", "zero"], default="manufactured")
    p.set_defaults(func=cmd_one_level)

    p = sub.add_parser("two-level", help="coarse Newton + one fine linear solve")
    _common(p, "--nh", 4)
    p.add_argument("--fine-nx", type=positive_int, default=None)
    p.add_argument("--fine-equals-coarse", action="store_true")
    p.add_argument("--f", choices=["manufactured", "zero"], default="manufactured")
    p.set_defaults(func=cmd_two_level)

    p = sub.add_parser("cavity", help="lid-driven cavity")
    _common(p, "--nh", 16)
    p.add_argument("--fine-nx", type=positive_int, default=None)
    p.add_argument("--one-level", action="store_true",
                   help="solve by Newton on the fine mesh instead")
    p.add_argument("--profile-samples", type=positive_int, default=65)
    p.set_defaults(func=cmd_cavity, samples=65)

    p = sub.add_parser("convergence", help="tables over mesh sizes or Reynolds numbers")
    _common(p, "--nh", 16)
    p.add_argument("--mode", choices=["one-level", "two-level"], default="one-level")
    p.add_argument("--sizes", type=comma_list(positive_int), default=None,
                   help="elements per side (coarse side for two-level)")
    p.add_argument("--re-sweep", type=comma_list(positive_float), default=None)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("scaling", help="coarse-to-fine mesh scaling")
    p.add_argument("--H", dest="H", type=comma_list(positive_float),
                   default=[0.25, 0.125, 1 / 16])
    p.add_argument("--kind", choices=[k.value for k in ElementKind] + ["all"], default="all")
    p.set_defaults(func=cmd_scaling)
    return parser


def _configs(args):
    newton = NewtonConfig(tol=args.tol, max_newton=args.max_newton,
                          initial_guess=args.initial,
                          continuation=tuple(args.continuation) if args.continuation else None)
    linear = SolverConfig(rel_tol=args.lin_tol, preconditioner=args.precond)
    return newton, linear


# ---------------------------------------------------------------- output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_stats(out: Path, stats: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "stats.json", "w") as fh:
        json.dump(_jsonable(stats), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


# ---------------------------------------------------------------- runs

def _run(stats: RunStats, solve):
    """Call ``solve()``; on failure keep whatever the stats already hold."""
    try:
        return solve()
    except (NewtonError, LinearSolveError) as exc:
        log.error("solver failure: %s", exc)
        stats.converged = False
        raise SolverFailure(str(exc)) from exc


def run_one_level(args, n, problem, f, bc):
    newton, linear = _configs(args)
    space = make_space(build_uniform(n, n), bc, args.quad)
    stats = RunStats("one-level", args.re, None, space.mesh.h)
    t0 = time.perf_counter()
    try:
        psi, _ = _run(stats, lambda: solve_one_level(space, args.re, f, newton, linear, stats))
    finally:
        stats.wall_seconds = time.perf_counter() - t0
    field = DiscreteField(space, psi)
    if isinstance(problem, ManufacturedProblem):
        stats.errors = error_norms(field, problem, seminorm=args.seminorm).as_dict()
    return field, stats


def run_two_level(args, nh, nf, problem, f, bc):
    newton, linear = _configs(args)
    cfg = TwoLevelConfig(nh, nf, newton, linear, args.quad)
    stats = RunStats("two-level", args.re, 1.0 / nh, 1.0 / cfg.fine_n)
    t0 = time.perf_counter()
    try:
        psi, _, _ = _run(stats, lambda: solve_two_level(cfg, args.re, f, bc, stats))
    finally:
        stats.wall_seconds = time.perf_counter() - t0
    field = DiscreteField(make_space(build_uniform(cfg.fine_n, cfg.fine_n), bc, args.quad), psi)
    if isinstance(problem, ManufacturedProblem):
        stats.errors = error_norms(field, problem, seminorm=args.seminorm).as_dict()
    return field, stats


def _manufactured(args):
    problem = ManufacturedProblem(args.re)
    if getattr(args, "f", "manufactured") == "zero":
        return None, CavityProblem.force, problem.bc
    return problem, problem.force, problem.bc


def _finish(args, stats, field):
    write_stats(args.out, stats.as_dict())
    if field is not None:
        write_csv(args.out / "field.csv", FIELD_HEADER, sample_field(field, args.samples))
    log.info("wrote results to %s", args.out)


def _guarded(args, make, extra=None):
    """Run ``make() -> (field, stats)``; write outputs and map failure to exit 1."""
    try:
        field, stats = make()
    except SolverFailure as exc:
        stats = exc.__cause__.stats if isinstance(exc.__cause__, NewtonError) else None
        write_stats(args.out, (stats.as_dict() if stats is not None else
                               {"converged": False}) | {"failure": str(exc)})
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    _finish(args, stats, field)
    if extra is not None:
        extra(field)
    return 0


def cmd_one_level(args) -> int:
    problem, f, bc = _manufactured(args)
    return _guarded(args, lambda: run_one_level(args, args.n, problem, f, bc))


def cmd_two_level(args) -> int:
    problem, f, bc = _manufactured(args)
    nf = args.n if args.fine_equals_coarse else args.fine_nx
    if nf is not None and nf % args.n:
        print("error: fine mesh must refine the coarse mesh", file=sys.stderr)
        return 2
    return _guarded(args, lambda: run_two_level(args, args.n, nf, problem, f, bc))


def cmd_cavity(args) -> int:
    problem = CavityProblem(args.re)
    nf = args.fine_nx or 2 * args.n

    def make():
        if args.one_level:
            return run_one_level(args, nf, problem, problem.force, problem.bc)
        return run_two_level(args, args.n, nf, problem, problem.force, problem.bc)

    return _guarded(args, make, lambda field: _cavity_profiles(args, field))


def _cavity_profiles(args, field):
    write_csv(args.out / "profile_u.csv", ["y", "u"],
              velocity_profile(field, "vertical", 0.5, args.profile_samples))
    write_csv(args.out / "profile_v.csv", ["x", "v"],
              velocity_profile(field, "horizontal", 0.5, args.profile_samples))


def _rates(rows, key):
    out = []
    for a, b in zip(rows, rows[1:]):
        ratio = a[key] / b[key]
        out.append([math.log(a["errors"][k] / b["errors"][k]) / math.log(ratio)
                    if a["errors"][k] > 0 and b["errors"][k] > 0 else float("nan")
                    for k in ("l2", "h1", "h2")])
    return out


TABLE_HEADER = ["re", "coarse_h", "fine_h", "newton_iters", "bicgstab_coarse",
                "bicgstab_fine", "l2", "h1", "h2", "wall_seconds", "converged"]


def cmd_convergence(args) -> int:
    if args.sizes and args.re_sweep:
        print("error: give --sizes or --re-sweep, not both", file=sys.stderr)
        return 2
    configs = ([(n, args.re) for n in args.sizes] if args.sizes
               else [(args.n, re) for re in (args.re_sweep or [args.re])])
    rows, status = [], 0
    for n, re in configs:
        run_args = argparse.Namespace(**vars(args))
        run_args.re = re
        problem = ManufacturedProblem(re)
        try:
            if args.mode == "one-level":
                _, stats = run_one_level(run_args, n, problem, problem.force, problem.bc)
            else:
                _, stats = run_two_level(run_args, n, None, problem, problem.force, problem.bc)
            rows.append(stats.as_dict())
        except SolverFailure as exc:
            print(f"solver failure for n={n}, Re={re}: {exc}", file=sys.stderr)
            status = 1
            rows.append({"re": re, "coarse_h": 1.0 / n if args.mode == "two-level" else None,
                         "fine_h": 1.0 / n if args.mode == "one-level" else 0.5 / n,
                         "newton_iters": 0, "bicgstab_iters_coarse": [],
                         "bicgstab_iters_fine": [], "errors": None,
                         "wall_seconds": 0.0, "converged": False})

    def fmt(r):
        e = r["errors"] or {"l2": float("nan"), "h1": float("nan"), "h2": float("nan")}
        its = r["bicgstab_iters_coarse"]
        return [r["re"], "" if r["coarse_h"] is None else r["coarse_h"], r["fine_h"],
                r["newton_iters"], ";".join(map(str, its)),
                ";".join(map(str, r["bicgstab_iters_fine"])),
                e["l2"], e["h1"], e["h2"], r["wall_seconds"], r["converged"]]

    write_csv(args.out / "table.csv", TABLE_HEADER, [fmt(r) for r in rows])
    ok = [r for r in rows if r["errors"]]
    if args.sizes and len(ok) >= 2:
        rates = _rates(ok, "fine_h")
        write_csv(args.out / "rates.csv", ["fine_h_from", "fine_h_to", "l2", "h1", "h2"],
                  [[a["fine_h"], b["fine_h"], *rt] for a, b, rt in zip(ok, ok[1:], rates)])
    for r in rows:
        print(",".join(str(v) for v in fmt(r)))
    return status


def cmd_scaling(args) -> int:
    kinds = list(ElementKind) if args.kind == "all" else [ElementKind(args.kind)]
    bad = [H for H in args.H if H >= 1]
    if bad:
        print(f"error: coarse widths must be below 1, got {bad}", file=sys.stderr)
        return 2
    print("element,exponent,H,h,residual")
    for kind in kinds:
        for H in args.H:
            h = scaling_h_for_H(kind, H)
            res = scaling_lhs(h) - H ** kind.exponent
            print(f"{kind.value},{Fraction(kind.exponent)},{H!r},{h!r},{res:.3e}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
