"""
League evaluation.

Each entrant plays every requested opponent from seat 1 for ``episodes``
full-length games with exploration switched off. Opponents are named fixed
strategies, ``self`` (a copy of the entrant) or ``other_seeds`` (every other
entrant, episodes pooled). Pairings run in a fixed order and each draws its
own uniform block from the ``LEAGUE`` stream, so a report is a pure function
of the entrants and the master seed.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from apps.envs import Environment
from apps.envs.normalization import normalized_return
from apps.envs.seeding import Purpose
from apps.league.fixed import get_fixed_player
from apps.league.players import CheckpointPlayer, Player
from apps.trainer.metrics import LEAGUE_EPISODES_TOTAL
from apps.trainer.rollout import seeded_rollout

logger = structlog.get_logger()

LEAGUE_COLUMNS = (
    "seed", "opponent", "mean_reward", "stderr", "episodes", "T", "normalized_mean",
)
SELF = "self"
OTHER_SEEDS = "other_seeds"
AGGREGATE = "all"
DEFAULT_OPPONENTS = ("Random", "AC", "AD", SELF, OTHER_SEEDS)


@dataclass(frozen=True)
class LeagueRow:
    """Time-averaged per-step reward of one entrant against one opponent.

    Attributes:
        seed: Entrant label, or ``"all"`` for the across-entrant aggregate.
        opponent: Opponent name.
        mean_reward: Mean over episodes (or over entrants for aggregates).
        stderr: Standard error of that mean.
        episodes: Episodes behind the row.
        horizon: Episode length T.
        normalized_mean: Grid-normalized mean, Coin Game only.
    """

    seed: str
    opponent: str
    mean_reward: float
    stderr: float
    episodes: int
    horizon: int
    normalized_mean: float | None = None

    def values(self) -> list[str]:
        norm = "" if self.normalized_mean is None else repr(self.normalized_mean)
        return [
            self.seed,
            self.opponent,
            repr(self.mean_reward),
            repr(self.stderr),
            str(self.episodes),
            str(self.horizon),
            norm,
        ]


@dataclass(frozen=True)
class LeagueReport:
    env: str
    rows: tuple[LeagueRow, ...]

    def row(self, seed: str, opponent: str) -> LeagueRow:
        for r in self.rows:
            if r.seed == seed and r.opponent == opponent:
                return r
        raise KeyError((seed, opponent))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LEAGUE_COLUMNS)
        for r in self.rows:
            writer.writerow(r.values())
        return buf.getvalue()

    def write_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path


def _stderr(samples: np.ndarray) -> float:
    if samples.size < 2:
        return 0.0
    return float(samples.std(ddof=1) / np.sqrt(samples.size))


def play_match(
    player: Player,
    opponent: Player,
    env: Environment,
    episodes: int,
    master_seed: int,
    counter: int,
) -> np.ndarray:
    """Per-episode time-averaged reward of ``player`` in seat 1, shape (E,)."""
    traj = seeded_rollout(
        env, player, opponent, 0.0, episodes, master_seed, counter, Purpose.LEAGUE
    )
    return traj.rewards1.mean(axis=1)


def _row(
    seed: str, opponent: str, samples: np.ndarray, env: Environment, episodes: int
) -> LeagueRow:
    mean = float(samples.mean())
    grid = getattr(env, "grid_size", None)
    return LeagueRow(
        seed=seed,
        opponent=opponent,
        mean_reward=mean,
        stderr=_stderr(samples),
        episodes=episodes,
        horizon=env.game_length,
        normalized_mean=None if grid is None else normalized_return(mean, grid),
    )


def _resolve_opponents(
    name: str, index: int, entrants: Sequence[Player], env: Environment
) -> list[Player]:
    if name == SELF:
        return [entrants[index]]
    if name == OTHER_SEEDS:
        return [p for j, p in enumerate(entrants) if j != index]
    return [get_fixed_player(name, env)]


def run_league(
    entrants: Sequence[Player],
    env: Environment,
    opponents: Sequence[str] = DEFAULT_OPPONENTS,
    episodes: int = 50,
    master_seed: int = 0,
) -> LeagueReport:
    """Evaluate every entrant against every opponent.

    Raises:
        ValueError: On an unknown opponent name or a non-positive episode count.
        UnsupportedPolicyError: If a fixed opponent does not exist for ``env``.
        EnvMismatchError: If a checkpoint entrant was trained elsewhere.
    """
    if episodes < 1:
        raise ValueError(f"episodes must be positive, got {episodes}")
    for name in opponents:
        if name not in (SELF, OTHER_SEEDS):
            get_fixed_player(name, env)
    for entrant in entrants:
        if isinstance(entrant, CheckpointPlayer):
            entrant.ensure_env(env)

    rows: list[LeagueRow] = []
    per_opponent: dict[str, list[float]] = {name: [] for name in opponents}
    counter = 0
    for i, entrant in enumerate(entrants):
        for name in opponents:
            pool = _resolve_opponents(name, i, entrants, env)
            if not pool:
                logger.warning("league.pairing_skipped", seed=entrant.name, opponent=name)
                continue
            samples = []
            for opp in pool:
                samples.append(play_match(entrant, opp, env, episodes, master_seed, counter))
                counter += 1
            pooled = np.concatenate(samples)
            LEAGUE_EPISODES_TOTAL.labels(opponent=name).inc(pooled.size)
            row = _row(entrant.name, name, pooled, env, pooled.size)
            rows.append(row)
            per_opponent[name].append(row.mean_reward)
            logger.debug(
                "league.pairing", seed=entrant.name, opponent=name, mean=row.mean_reward
            )

    for name in opponents:
        means = np.asarray(per_opponent[name])
        if means.size == 0:
            continue
        agg = _row(AGGREGATE, name, means, env, episodes)
        rows.append(agg)

    logger.info("league.finished", entrants=len(entrants), rows=len(rows), env=env.name)
    return LeagueReport(env=env.name, rows=tuple(rows))
