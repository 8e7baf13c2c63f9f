"""
Cooperation/exploitability thresholds and time-to-threshold.

A level is passed when the normalized return against a copy of itself and
the normalized return against always-defect both reach the level's floor.
``time_to_threshold`` scans a stream of periodic evaluations and keeps the
first evaluation at which each level passed; later regressions do not undo
a crossing.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from apps.envs import Environment
from apps.envs.normalization import normalized_return
from apps.envs.seeding import Purpose
from apps.league.fixed import FixedKind, get_fixed_player
from apps.league.players import Player
from apps.trainer.rollout import seeded_rollout

THRESHOLD_COLUMNS = ("seed", "level", "passed", "wall_clock_s")
NOT_REACHED = "not reached"


class Level(StrEnum):
    WEAK = "weak"
    MEDIUM = "medium"
    STRONG = "strong"


@dataclass(frozen=True)
class ThresholdSpec:
    """Minimum normalized returns for one level.

    Attributes:
        level: Level name.
        vs_self: Floor on the normalized return against a copy of itself.
        vs_ad: Floor on the normalized return against always-defect.
    """

    level: Level
    vs_self: float
    vs_ad: float

    def passed(self, norm_vs_self: float, norm_vs_ad: float) -> bool:
        return norm_vs_self >= self.vs_self and norm_vs_ad >= self.vs_ad


THRESHOLDS: tuple[ThresholdSpec, ...] = (
    ThresholdSpec(Level.WEAK, vs_self=0.05, vs_ad=-1.2),
    ThresholdSpec(Level.MEDIUM, vs_self=0.1, vs_ad=-0.5),
    ThresholdSpec(Level.STRONG, vs_self=0.2, vs_ad=-0.2),
)


def threshold_check(
    norm_vs_self: float,
    norm_vs_ad: float,
    specs: Sequence[ThresholdSpec] = THRESHOLDS,
) -> dict[Level, bool]:
    """Pass/fail per level."""
    return {spec.level: spec.passed(norm_vs_self, norm_vs_ad) for spec in specs}


@dataclass(frozen=True)
class Evaluation:
    """One periodic probe of a learner during training."""

    iteration: int
    wall_clock_s: float
    norm_vs_self: float
    norm_vs_ad: float


@dataclass(frozen=True)
class Crossing:
    """First evaluation at which a level passed; ``None`` fields if it never did."""

    level: Level
    iteration: int | None
    wall_clock_s: float | None

    @property
    def reached(self) -> bool:
        return self.iteration is not None

    def values(self, seed: str) -> list[str]:
        if self.wall_clock_s is None:
            return [seed, str(self.level), "false", NOT_REACHED]
        return [seed, str(self.level), "true", f"{self.wall_clock_s:.3f}"]


def time_to_threshold(
    evaluations: Iterable[Evaluation],
    specs: Sequence[ThresholdSpec] = THRESHOLDS,
) -> list[Crossing]:
    """First crossing of every level in evaluation order."""
    first: dict[Level, Evaluation] = {}
    for ev in evaluations:
        for spec in specs:
            if spec.level not in first and spec.passed(ev.norm_vs_self, ev.norm_vs_ad):
                first[spec.level] = ev
    crossings = []
    for spec in specs:
        hit = first.get(spec.level)
        crossings.append(
            Crossing(
                level=spec.level,
                iteration=None if hit is None else hit.iteration,
                wall_clock_s=None if hit is None else hit.wall_clock_s,
            )
        )
    return crossings


def crossings_csv(rows: Iterable[tuple[str, Sequence[Crossing]]]) -> str:
    """Threshold CSV for ``(seed label, crossings)`` pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(THRESHOLD_COLUMNS)
    for seed, crossings in rows:
        for c in crossings:
            writer.writerow(c.values(seed))
    return buf.getvalue()


def evaluate_thresholds(
    player: Player,
    env: Environment,
    episodes: int,
    master_seed: int,
    counter: int,
) -> tuple[float, float]:
    """Normalized per-step return of ``player`` against itself and against AD.

    Raises:
        ValueError: Outside the Coin Game, where normalization is undefined.
    """
    grid = getattr(env, "grid_size", None)
    if grid is None:
        raise ValueError(f"threshold evaluation needs the Coin Game, got {env.name!r}")
    defector = get_fixed_player(FixedKind.AD, env)
    returns = []
    for k, opponent in enumerate((player, defector)):
        traj = seeded_rollout(
            env, player, opponent, 0.0, episodes, master_seed, 2 * counter + k, Purpose.EVAL
        )
        returns.append(normalized_return(float(np.mean(traj.rewards1)), grid))
    return returns[0], returns[1]
