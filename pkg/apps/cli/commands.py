"""
Subcommand implementations.

Each ``cmd_*`` function takes already-validated inputs, writes its outputs
under the run directory and returns the paths it wrote. Argument parsing and
exit codes live in ``apps.cli.main``.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any, TextIO

import structlog

from apps.agents import config_hash, cooperation_profile
from apps.cli.config import ConfigError, RunConfig, serialize_config
from apps.envs import Environment, make_env
from apps.envs.models import IpdTag
from apps.league import (
    THRESHOLDS,
    CheckpointPlayer,
    Crossing,
    Evaluation,
    FixedKind,
    Player,
    ThresholdSpec,
    evaluate_thresholds,
    get_fixed_player,
    run_league,
    time_to_threshold,
)
from apps.league.league import DEFAULT_OPPONENTS, OTHER_SEEDS, SELF
from apps.league.thresholds import crossings_csv
from apps.trainer import METRIC_COLUMNS, BudgetTracker, IterationMetrics, TrainState, train
from apps.trainer.loop import IterationHook
from apps.trainer.metrics import write_metrics
from apps.trainer.persist import resume_state, save_state

logger = structlog.get_logger()

FIXED_PREFIX = "fixed:"
DEFAULT_GRID_SIZES = (3, 4, 5, 6, 7)
DEFAULT_EVAL_EVERY = 50


class Ablation(StrEnum):
    REPLAY_BUFFER = "replay_buffer"
    SELF_PLAY = "self_play"
    SHAPING = "shaping"


_ABLATION_KEYS = {
    Ablation.REPLAY_BUFFER: "agent_replay_buffer",
    Ablation.SELF_PLAY: "self_play",
    Ablation.SHAPING: "shaping",
}


def apply_ablations(config: RunConfig, ablations: Iterable[str]) -> RunConfig:
    """Switch off the named components.

    Raises:
        ConfigError: On an unknown ablation name.
    """
    update: dict[str, Any] = {}
    for name in ablations:
        try:
            update[_ABLATION_KEYS[Ablation(name)]] = False
        except ValueError as exc:
            available = [a.value for a in Ablation]
            raise ConfigError(
                "ablate", f"unknown ablation {name!r}, available: {available}"
            ) from exc
    return config.model_copy(update=update) if update else config


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class MetricsWriter:
    """Streams iteration rows to ``metrics.csv`` in a fixed column order."""

    def __init__(self, handle: TextIO, clock: BudgetTracker | None = None) -> None:
        self._writer = csv.writer(handle, lineterminator="\n")
        self._handle = handle
        self._clock = clock
        self._writer.writerow(METRIC_COLUMNS)

    def __call__(self, state: TrainState, metrics: IterationMetrics) -> None:
        wall = None if self._clock is None else round(self._clock.elapsed, 3)
        row = metrics.row(wall_clock_s=wall)
        self._writer.writerow([_cell(row[col]) for col in METRIC_COLUMNS])
        self._handle.flush()


def _write_cooperation(path: Path, state: TrainState) -> Path:
    tags = [tag.name for tag in IpdTag]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["agent", *tags])
        for k, bundle in enumerate(state.agents):
            profile = cooperation_profile(bundle.actor)
            writer.writerow([k + 1, *(repr(profile[tag]) for tag in tags)])
            logger.info("trainer.cooperation", agent=k + 1, **profile)
    return path


@dataclass
class TrainOutcome:
    out: Path
    iterations_run: int
    partial: bool
    paths: list[Path] = field(default_factory=list)


def cmd_train(
    config: RunConfig,
    *,
    on_iteration: IterationHook | None = None,
    metrics_name: str = "metrics.csv",
    resume: Path | None = None,
) -> TrainOutcome:
    """Train to completion or until the budget runs out, then checkpoint.

    Writes ``config.toml``, ``metrics.csv``, ``agent<k>.npz``,
    ``metrics.prom`` and, for the IPD, ``cooperation.csv`` under
    ``config.out``. With ``checkpoint_every`` set, ``agent<k>_<iteration>.npz``
    is also written after every iteration count divisible by it. ``resume``
    names a directory of ``agent<k>.npz`` files to continue from.

    Raises:
        OSError: If the output directory cannot be written.
        CheckpointError: If the resume checkpoints do not match the config.
        NonFiniteLossError: If training diverges.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(serialize_config(config), encoding="utf-8")
    run_hash = config_hash(config.model_dump())
    train_config = config.train_config()
    resumed = resume_state(train_config, resume) if resume is not None else None
    snapshots: list[Path] = []

    budget = BudgetTracker(max_seconds=config.budget_seconds)
    clock = budget if config.record_wall_clock else None
    with (out / metrics_name).open("w", newline="", encoding="utf-8") as handle:
        writer = MetricsWriter(handle, clock)

        def hook(state: TrainState, metrics: IterationMetrics) -> None:
            writer(state, metrics)
            every = config.checkpoint_every
            if every and state.iteration % every == 0:
                suffix = f"_{state.iteration:06d}"
                snapshots.extend(save_state(state, out, run_hash=run_hash, suffix=suffix))
            if on_iteration is not None:
                on_iteration(state, metrics)

        result = train(train_config, budget=budget, on_iteration=hook, state=resumed)

    paths = [out / metrics_name, *snapshots]
    paths += save_state(result.state, out, partial=result.partial, run_hash=run_hash)
    if config.env == "ipd":
        paths.append(_write_cooperation(out / "cooperation.csv", result.state))
    paths.append(write_metrics(out / "metrics.prom"))
    logger.info(
        "cli.train_finished",
        out=str(out),
        iterations_run=result.iterations_run,
        partial=result.partial,
    )
    return TrainOutcome(
        out=out, iterations_run=result.iterations_run, partial=result.partial, paths=paths
    )


# ── League ───────────────────────────────────────────────────────────────────


def _league_env(
    entrants: Sequence[str], env_name: str | None, grid_size: int | None, game_length: int
) -> Environment:
    if env_name is None:
        first = next((e for e in entrants if not e.startswith(FIXED_PREFIX)), None)
        if first is None:
            raise ConfigError("env", "required when every entrant is a fixed policy")
        manifest = CheckpointPlayer.from_path(Path(first)).manifest
        env_name = str(manifest["env"])
        grid_size = grid_size or int(manifest.get("grid_size", 3))
    return make_env(env_name, game_length=game_length, grid_size=grid_size or 3)


def _check_fixed_names(key: str, names: Iterable[str], extra: Sequence[str] = ()) -> None:
    available = [k.value for k in FixedKind] + list(extra)
    for name in names:
        if name not in available:
            raise ConfigError(key, f"unknown policy {name!r}, expected one of {available}")


def load_entrant(spec: str, env: Environment) -> Player:
    """``fixed:<name>`` or a checkpoint path.

    Raises:
        CheckpointError: If the checkpoint cannot be read.
        EnvMismatchError: If it was trained on another environment.
    """
    if spec.startswith(FIXED_PREFIX):
        return get_fixed_player(spec.removeprefix(FIXED_PREFIX), env)
    return CheckpointPlayer.from_path(Path(spec), env)


def cmd_league(
    entrants: Sequence[str],
    out: Path,
    *,
    opponents: Sequence[str] = DEFAULT_OPPONENTS,
    env_name: str | None = None,
    grid_size: int | None = None,
    game_length: int = 50,
    episodes: int = 50,
    seed: int = 42,
) -> Path:
    """Run the league over ``entrants`` and write ``league.csv`` under ``out``.

    Raises:
        ConfigError: If no entrant is given or a fixed policy name is unknown.
    """
    if not entrants:
        raise ConfigError("entrants", "at least one checkpoint or fixed policy is required")
    fixed = [e.removeprefix(FIXED_PREFIX) for e in entrants if e.startswith(FIXED_PREFIX)]
    _check_fixed_names("entrants", fixed)
    _check_fixed_names("opponent", opponents, extra=(SELF, OTHER_SEEDS))
    env = _league_env(entrants, env_name, grid_size, game_length)
    players = [load_entrant(spec, env) for spec in entrants]
    report = run_league(players, env, opponents, episodes=episodes, master_seed=seed)
    return report.write_csv(out / "league.csv")


# ── Benchmark ────────────────────────────────────────────────────────────────


@dataclass
class ThresholdProbe:
    """Evaluates the learner every ``every`` iterations."""

    config: RunConfig
    every: int
    clock: BudgetTracker
    evaluations: list[Evaluation] = field(default_factory=list)

    def __call__(self, state: TrainState, metrics: IterationMetrics) -> None:
        if metrics.iteration % self.every != 0:
            return
        player = CheckpointPlayer(
            label=f"seed{self.config.seed}",
            net=state.actor_net,
            params=state.agents[0].actor,
        )
        vs_self, vs_ad = evaluate_thresholds(
            player, state.env, self.config.eval_episodes, self.config.seed, metrics.iteration
        )
        self.evaluations.append(
            Evaluation(
                iteration=metrics.iteration,
                wall_clock_s=self.clock.elapsed,
                norm_vs_self=vs_self,
                norm_vs_ad=vs_ad,
            )
        )
        logger.info(
            "bench.evaluation", iteration=metrics.iteration, vs_self=vs_self, vs_ad=vs_ad
        )


def cmd_bench(
    config: RunConfig,
    grid_sizes: Sequence[int] = (3,),
    thresholds: Sequence[ThresholdSpec] = THRESHOLDS,
) -> list[Path]:
    """Train with periodic threshold probes; one ``thresholds.csv`` per grid size.

    Raises:
        ConfigError: Outside the Coin Game.
    """
    if config.env != "coin":
        raise ConfigError("env", "the threshold benchmark needs the Coin Game")
    every = config.eval_every or DEFAULT_EVAL_EVERY
    root = Path(config.out)
    paths = []
    for g in grid_sizes:
        sized = config.model_copy(
            update={"grid_size": g, "record_wall_clock": True, "out": str(root / f"grid{g}")}
        )
        probe = ThresholdProbe(config=sized, every=every, clock=BudgetTracker())
        cmd_train(sized, on_iteration=probe)
        crossings: list[Crossing] = time_to_threshold(probe.evaluations, thresholds)
        for c in crossings:
            logger.info(
                "bench.crossing",
                grid_size=g,
                level=str(c.level),
                iteration=c.iteration,
                wall_clock_s=c.wall_clock_s,
            )
        path = Path(sized.out) / "thresholds.csv"
        path.write_text(crossings_csv([(f"seed{config.seed}", crossings)]), encoding="utf-8")
        paths.append(path)
    return paths
