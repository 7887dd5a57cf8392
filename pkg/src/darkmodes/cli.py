"""
``dmk`` command line.

Exit codes: 0 dark modes found and verified (or success), 1 input error,
2 candidates exist but the dark condition fails, 3 no candidates,
4 unstable integration.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .decomposition import decompose
from .errors import DarkModeError
from .model import transform
from .moments import NoiseModel, simulate
from .symplectic import Tolerances


def _tolerances(args) -> Tolerances:
    return Tolerances.from_env(rank_rel=args.tol_rank, zero_abs=args.tol_zero)


def _add_tol_flags(p):
    p.add_argument("--tol-rank", type=float, default=None,
                   help="relative singular-value threshold for ranks (default: max(shape)*eps)")
    p.add_argument("--tol-zero", type=float, default=None,
                   help="zero threshold for residual tests (default 1e-10 or $DMK_TOL_ZERO)")


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    tol = _tolerances(args)
    desc = io.load_description(args.file)
    system = desc.to_system(tol)
    if system.n1 is None:
        system = system.with_partition(system.n)
    try:
        report = io.analyze(system, tol, oracle=args.oracle, title=desc.title)
    except DarkModeError as exc:
        raise io.DescriptionError(f"{args.file}: {exc}") from None
    text = json.dumps(report, indent=2) + "\n" if args.json else io.format_text(report)
    _emit(text, args.output)
    return report["exit_code"]


def cmd_synthesize(args) -> int:
    tol = _tolerances(args)
    recipe = io.load_recipe(args.recipe, tol)
    try:
        desc = io.synthesize(recipe, tol)
    except DarkModeError as exc:
        ports = recipe.spec.ports or "default halves"
        raise io.DescriptionError(f"{args.recipe}: {exc} (port map: {ports})") from None
    _emit(io.write_description(desc), args.output)
    return 0


def cmd_simulate(args) -> int:
    tol = _tolerances(args)
    if not (args.dt > 0 and args.t_end > 0):
        raise io.DescriptionError("--dt and --t-end must be positive")
    desc = io.load_description(args.file)
    system = desc.to_system(tol)
    dim = 2 * system.n
    dark = 0
    if args.transformed:
        if system.n1 is None:
            system = system.with_partition(system.n)
        dec = decompose(system, tol)
        dark = dec.dark_candidate_count
        system = transform(system, dec.T, tol)
    mean0 = np.ones(dim) if args.mean0 is None else np.array(args.mean0, dtype=float)
    V0 = 0.5 * np.eye(dim)
    scales = args.noise_scale or [1.0]
    runs = []
    for s in scales:
        runs.append(simulate(system, mean0, V0, NoiseModel.vacuum(system.m, s), args.t_end, args.dt))
    if args.csv:
        runs[0].write_csv(args.csv)
    summary = {
        "samples": len(runs[0].times),
        "t_end": float(runs[0].times[-1]),
        "dt": args.dt,
        "noise_scales": scales,
        "transformed": bool(args.transformed),
        "aborted": any(r.aborted for r in runs),
        "final_mean": runs[0].means[-1],
        "final_covariance": runs[0].covariances[-1],
        "csv": args.csv,
    }
    if args.transformed:
        dm, dv = io.max_dark_deviation(runs, dark)
        summary.update(dark_dimension=dark, max_dark_mean_deviation=dm, max_dark_covariance_deviation=dv)
    sys.stdout.write(json.dumps(io.num(summary), indent=2) + "\n")
    if summary["aborted"]:
        print("error: integration became unstable; partial trajectory kept", file=sys.stderr)
        return io.EXIT_UNSTABLE
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmk", description="Dark modes of quantum linear systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="find and verify dark modes of a system description")
    p.add_argument("file")
    _add_tol_flags(p)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check verified dark modes against the controllability/observability oracle")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="machine-readable report")
    fmt.add_argument("--text", dest="json", action="store_false", help="human-readable report (default)")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="compose two systems from a recipe")
    p.add_argument("recipe")
    p.add_argument("-o", "--output", help="write the composite description here instead of stdout")
    _add_tol_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="integrate mean and covariance dynamics")
    p.add_argument("file")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--noise-scale", type=float, action="append",
                   help="vacuum noise multiplier; repeat to sweep (default 1)")
    p.add_argument("--transformed", action="store_true",
                   help="simulate in dark/bright coordinates and report dark-block deviations")
    p.add_argument("--mean0", type=float, nargs="+", help="initial mean (default all ones)")
    p.add_argument("--csv", help="trajectory CSV for the first noise scale")
    _add_tol_flags(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DarkModeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return io.EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
