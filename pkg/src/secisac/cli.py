"""Command-line entry point: ``secisac {fig-a,fig-b,fig-c,sweep,validate}``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .errors import ConfigError
from .experiments import ExperimentConfig, load_config, run_fig_a, run_fig_b, run_fig_c, run_sweep
from .stochastic import MODES
from .validation import run_validation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2

_TABLES = {"fig-a": run_fig_a, "fig-b": run_fig_b, "fig-c": run_fig_c, "sweep": run_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value scenario file")
    common.add_argument("--seed", type=int, help="master seed (non-negative integer)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--mode", choices=MODES, help="ergodic-CRB angle normalisation")

    parser = argparse.ArgumentParser(prog="secisac", description="Secure ISAC CRB and secrecy-rate experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig-a", parents=[common], help="ergodic rates versus tau")
    sub.add_parser("fig-b", parents=[common], help="ergodic CRBs versus tau")
    sub.add_parser("fig-c", parents=[common], help="CRB CCDFs at a fixed tau")
    sub.add_parser("sweep", parents=[common], help="rates and ergodic CRBs over sweep_param/sweep_grid")
    sub.add_parser("validate", parents=[common], help="run the invariant and oracle checks")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        changes["seed"] = args.seed
    for name in ("trials", "mode", "out"):
        value = getattr(args, name)
        if value is not None:
            changes[name] = value
    return config.replace(**changes) if changes else config


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "validate":
            report = run_validation(config)
            _emit(report.text(), config.out)
            return EXIT_OK if report.passed else EXIT_VALIDATION
        table = _TABLES[args.command](config)
        _emit(table.to_csv(), config.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"secisac: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
