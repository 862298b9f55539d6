"""Command-line front end: one subcommand per experiment recipe.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, load_config, with_overrides
from .errors import ConfigError, IntegrationDivergedError, PreconditionError
from .experiments import (
    run_phase_voltage,
    run_randomization,
    run_stability,
    run_sweep,
)
from .protocols import BB84, DPS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

_SUBCOMMANDS = {
    "phase-voltage": "phase_voltage",
    "randomization": "randomization",
    "bb84-sweep": "bb84_sweep",
    "dps-sweep": "dps_sweep",
    "stability": "stability",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chirplink",
        description="Simulate the phase-chirp QKD light source and its BB84/DPS links.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _SUBCOMMANDS:
        p = sub.add_parser(command, help=f"run the {command.replace('-', ' ')} experiment")
        p.add_argument("--config", help="flat key-value configuration file")
        p.add_argument("--seed", type=int, default=None, help="override rng_seed")
        p.add_argument("--out", default=None, help="override output_path")
    return parser


def _dispatch(cfg: ExperimentConfig):
    if cfg.experiment == "phase_voltage":
        return run_phase_voltage(cfg)
    if cfg.experiment == "randomization":
        return run_randomization(cfg)
    if cfg.experiment == "bb84_sweep":
        return run_sweep(cfg, BB84)
    if cfg.experiment == "dps_sweep":
        return run_sweep(cfg, DPS)
    return run_stability(cfg)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, PreconditionError)):
        return EXIT_CONFIG
    if isinstance(exc, IntegrationDivergedError):
        return EXIT_DIVERGED
    raise exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    experiment = _SUBCOMMANDS[args.command]
    try:
        if args.config:
            cfg = load_config(args.config, experiment)
        else:
            cfg = ExperimentConfig(experiment=experiment)
        cfg = with_overrides(cfg, seed=args.seed, out=args.out)
        _dispatch(cfg)
    except (ConfigError, PreconditionError, IntegrationDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path:
        print(f"wrote {cfg.output_path}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
