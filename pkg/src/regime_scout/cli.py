"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
``REGIME_SCOUT_THREADS`` caps the number of BLAS threads.
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
from pathlib import Path

from .config import PRESETS, load_config
from .errors import ConfigInvalid, NonFinite, RegimeScoutError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


def _thread_limit():
    raw = os.environ.get("REGIME_SCOUT_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"REGIME_SCOUT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"REGIME_SCOUT_THREADS must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def cmd_explore(args) -> int:
    from .explorer import run
    from .outputs import write_run

    cfg = load_config(args.config)
    out = Path(args.out)

    def progress(state):
        if args.verbose:
            rec = state.log[-1]
            print(f"iteration {rec.iteration}: label {rec.label}, max std {rec.max_std:.4f}", file=sys.stderr)

    report = run(cfg, progress)
    write_run(out, report)
    print(f"{report.stop_reason}: {len(report.thetas)} samples, {report.n_regimes} regimes -> {out}")
    return EXIT_OK


def _parse_theta(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--theta must be comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    from .dynamics import simulate
    from .outputs import write_timeseries

    spec = load_config(args.config).system
    theta = _parse_theta(args.theta)
    try:
        spec.check_theta(theta)
    except ValueError as exc:
        raise UsageError(f"--theta: {exc}") from None
    write_timeseries(args.out, simulate(spec, theta))
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracles import oracle_grid
    from .outputs import write_oracle

    spec = load_config(args.config).system
    if spec.dim != 2:
        raise UsageError(f"the oracle grid needs exactly two free axes, the config has {spec.dim}")
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    points, labels = oracle_grid(spec, args.grid)
    write_oracle(args.out, spec, points, labels)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .outputs import RUN_FILES
    from .svg import render

    run = Path(args.run)
    missing = [name for name in RUN_FILES if not (run / name).is_file()]
    if missing:
        raise UsageError(f"{run} is not a complete run directory (missing {', '.join(missing)})")
    try:
        text = render(run, args.fig)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    Path(args.out).write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regime-scout",
        description="Discover response regimes of a dynamical system and learn their boundaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    config_help = f"JSON config file, or a bundled preset name ({', '.join(PRESETS)})"

    p = sub.add_parser("explore", help="run an active exploration and write the run directory")
    p.add_argument("--config", required=True, help=config_help)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", help="log each iteration to stderr")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("simulate", help="integrate one parameter vector and write the time series")
    p.add_argument("--config", required=True, help=config_help)
    p.add_argument("--theta", required=True, help="comma-separated free-axis values")
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="label an R x R grid with the brute-force ground truth")
    p.add_argument("--config", required=True, help=config_help)
    p.add_argument("--grid", required=True, type=int, help="nodes per axis")
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", help="render an SVG figure from a run directory")
    p.add_argument("--run", required=True, help="directory written by explore")
    p.add_argument("--fig", required=True, choices=("regimes", "uncertainty", "surface", "pca"))
    p.add_argument("--out", required=True, help="output SVG file")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except (ConfigInvalid, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFinite as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RegimeScoutError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
