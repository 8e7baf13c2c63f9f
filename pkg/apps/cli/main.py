"""
loqa-lab command line.

Usage::

    loqa-lab train --preset ipd-desk --seed 42 --out runs/ipd42
    loqa-lab train --config coin.toml --ablate replay_buffer --budget-seconds 7200
    loqa-lab train --preset ipd --iterations 6000 --resume runs/ipd42 --out runs/ipd42-more
    loqa-lab league runs/coin42/agent1.npz runs/coin43/agent1.npz --out league/
    loqa-lab bench --preset coin-desk --grid-size 3 --grid-size 4 --eval-every 50
    loqa-lab export runs/*/metrics.csv --out plotdata.csv

Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import uuid
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import structlog

from apps.agents.checkpoint import CheckpointError
from apps.cli.commands import (
    DEFAULT_GRID_SIZES,
    Ablation,
    apply_ablations,
    cmd_bench,
    cmd_league,
    cmd_train,
)
from apps.cli.config import ConfigError, RunConfig, parse_config
from apps.cli.export import ExportSchemaError, export_plotdata
from apps.envs import ENV_NAMES
from apps.league import EnvMismatchError, UnsupportedPolicyError
from apps.league.league import DEFAULT_OPPONENTS
from apps.trainer import NonFiniteLossError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

logger = structlog.get_logger()


def _get_env(key: str, default: str = "") -> str:
    """Read env var at call time."""
    return os.getenv(key, default)


def _configure_logging() -> None:
    """Configure structlog. Reads env vars at call time, not import time."""
    log_level = _get_env("LOG_LEVEL", "info").upper()
    log_pretty = _get_env("LOG_PRETTY", "false").lower() == "true"

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            (
                structlog.dev.ConsoleRenderer()
                if log_pretty
                else structlog.processors.JSONRenderer()
            ),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            getattr(logging, log_level, logging.INFO)
        ),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
    )


# ── Argument parsing ─────────────────────────────────────────────────────────


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="Flat TOML run configuration")
    parser.add_argument("--preset", help="ipd, ipd-desk, coin, coin-large or coin-desk")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path)
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--budget-seconds", type=float, dest="budget_seconds")
    parser.add_argument("--eval-every", type=int, dest="eval_every")
    parser.add_argument(
        "--ablate",
        action="append",
        default=[],
        choices=[a.value for a in Ablation],
        help="Switch off a component; may be repeated",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loqa-lab", description="Train and evaluate LOQA agents."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Train agents and write metrics and checkpoints")
    _add_run_flags(train)
    train.add_argument("--grid-size", type=int, dest="grid_size")
    train.add_argument(
        "--resume", type=Path, help="Continue from the agent<k>.npz files in this directory"
    )

    bench = sub.add_parser("bench", help="Time-to-threshold benchmark over grid sizes")
    _add_run_flags(bench)
    bench.add_argument(
        "--grid-size",
        type=int,
        action="append",
        dest="grid_sizes",
        help="Grid size to benchmark; may be repeated (default 3)",
    )
    bench.add_argument(
        "--sweep",
        action="store_true",
        help=f"Benchmark every grid size in {list(DEFAULT_GRID_SIZES)}",
    )

    league = sub.add_parser("league", help="Evaluate checkpoints against a league")
    league.add_argument(
        "entrants", nargs="+", help="Checkpoint paths or fixed:<AC|AD|Random|TFT>"
    )
    league.add_argument("--opponent", action="append", dest="opponents")
    league.add_argument("--env", choices=list(ENV_NAMES))
    league.add_argument("--grid-size", type=int, dest="grid_size")
    league.add_argument("--game-length", type=int, default=50, dest="game_length")
    league.add_argument("--episodes", type=int, default=50)
    league.add_argument("--seed", type=int, default=42)
    league.add_argument("--out", type=Path, default=Path("league"))

    export = sub.add_parser("export", help="Merge metrics CSVs into long-format plot data")
    export.add_argument("inputs", nargs="*", type=Path)
    export.add_argument("--out", type=Path, default=Path("plotdata.csv"))
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    keys = ("preset", "seed", "iterations", "budget_seconds", "eval_every", "grid_size")
    overrides = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if args.out is not None:
        overrides["out"] = str(args.out)
    return overrides


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Layer the config file and command-line flags.

    Raises:
        ConfigError: On an invalid key or value.
        OSError: If the config file cannot be read.
    """
    text = args.config.read_text(encoding="utf-8") if args.config is not None else ""
    config = parse_config(text, _overrides(args))
    return apply_ablations(config, args.ablate)


# ── Dispatch ─────────────────────────────────────────────────────────────────


def _run(args: argparse.Namespace) -> None:
    if args.command == "train":
        config = load_run_config(args)
        structlog.contextvars.bind_contextvars(seed=config.seed, preset=config.preset)
        cmd_train(config, resume=args.resume)
    elif args.command == "bench":
        config = load_run_config(args)
        structlog.contextvars.bind_contextvars(seed=config.seed, preset=config.preset)
        sizes = DEFAULT_GRID_SIZES if args.sweep else (args.grid_sizes or (3,))
        cmd_bench(config, sizes)
    elif args.command == "league":
        cmd_league(
            args.entrants,
            args.out,
            opponents=args.opponents or DEFAULT_OPPONENTS,
            env_name=args.env,
            grid_size=args.grid_size,
            game_length=args.game_length,
            episodes=args.episodes,
            seed=args.seed,
        )
    else:
        if not args.inputs:
            raise ConfigError("inputs", "at least one metrics CSV is required")
        export_plotdata(args.inputs, args.out)


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    _configure_logging()
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(run_id=uuid.uuid4().hex[:12], command=args.command)

    try:
        _run(args)
    except ConfigError as exc:
        logger.error("cli.config_error", key=exc.key, constraint=exc.constraint)
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except (CheckpointError, ExportSchemaError) as exc:
        logger.error("cli.io_error", error=str(exc))
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except OSError as exc:
        logger.error("cli.io_error", path=exc.filename, error=exc.strerror)
        sys.stderr.write(f"error: {exc.filename}: {exc.strerror}\n")
        return EXIT_IO
    except (NonFiniteLossError, EnvMismatchError, UnsupportedPolicyError, ValueError) as exc:
        logger.error("cli.runtime_error", error=str(exc))
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


def cli_main() -> None:
    """Entry point registered in pyproject.toml as the ``loqa-lab`` command."""
    sys.exit(main())


if __name__ == "__main__":
    cli_main()
