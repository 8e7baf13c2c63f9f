"""
Fixed reference strategies.

IPD: always cooperate, always defect, uniform random and tit-for-tat.
Coin Game: always defect walks the shortest wrapped path to the coin
whatever its colour; always cooperate only chases its own coin and steps
around the other agent's; random moves uniformly. Ties between equally
good moves go to the first in the order up, down, left, right.

Strategies read the egocentric observation only, so they sit in either
seat without extra state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from apps.envs import Environment
from apps.envs.coin import N_MOVES, N_PLANES
from apps.envs.models import MOVE_DELTAS, IpdAction, IpdTag


class FixedKind(StrEnum):
    AC = "AC"
    AD = "AD"
    RANDOM = "Random"
    TFT = "TFT"


class UnsupportedPolicyError(Exception):
    """Raised when a fixed strategy has no definition for an environment."""

    def __init__(self, kind: str, env: str) -> None:
        self.kind = kind
        self.env = env
        super().__init__(f"Fixed policy {kind!r} is not defined for env {env!r}")


# ── IPD ──────────────────────────────────────────────────────────────────────

# Tags after which the opponent's last move was cooperation (egocentric).
_OPPONENT_COOPERATED = (IpdTag.START, IpdTag.CC, IpdTag.DC)


def _ipd_probs(kind: FixedKind, obs: np.ndarray) -> np.ndarray:
    batch = obs.shape[0]
    probs = np.zeros((batch, 2))
    if kind == FixedKind.AC:
        probs[:, IpdAction.C] = 1.0
    elif kind == FixedKind.AD:
        probs[:, IpdAction.D] = 1.0
    elif kind == FixedKind.RANDOM:
        probs[:] = 0.5
    else:
        tag = obs.argmax(axis=-1)
        cooperate = np.isin(tag, _OPPONENT_COOPERATED)
        probs[np.arange(batch), np.where(cooperate, IpdAction.C, IpdAction.D)] = 1.0
    return probs


# ── Coin Game ────────────────────────────────────────────────────────────────


def grid_size_from_obs_dim(obs_dim: int) -> int:
    """Invert ``coin_obs_dim``."""
    g = math.isqrt((obs_dim - 2 * N_MOVES) // N_PLANES)
    if N_PLANES * g * g + 2 * N_MOVES != obs_dim:
        raise ValueError(f"{obs_dim} is not a Coin Game observation size")
    return g


def _wrapped(delta: np.ndarray, g: int) -> np.ndarray:
    d = np.abs(delta) % g
    return np.minimum(d, g - d).sum(axis=-1)


def _coin_probs(kind: FixedKind, obs: np.ndarray) -> np.ndarray:
    batch = obs.shape[0]
    if kind == FixedKind.RANDOM:
        return np.full((batch, N_MOVES), 1.0 / N_MOVES)

    g = grid_size_from_obs_dim(obs.shape[-1])
    planes = obs[:, : N_PLANES * g * g].reshape(batch, N_PLANES, g * g)
    own_cell = planes[:, 0].argmax(axis=-1)
    own_coin = planes[:, 2].any(axis=-1)
    coin_cell = np.where(own_coin, planes[:, 2].argmax(axis=-1), planes[:, 3].argmax(axis=-1))
    own = np.stack([own_cell // g, own_cell % g], axis=-1)
    coin = np.stack([coin_cell // g, coin_cell % g], axis=-1)

    after = (own[:, None, :] + MOVE_DELTAS[None, :, :]) % g  # (B, moves, 2)
    dist_now = _wrapped(coin - own, g)
    dist_after = _wrapped(coin[:, None, :] - after, g)  # (B, moves)

    chase = dist_after.argmin(axis=-1)
    if kind == FixedKind.AD:
        action = chase
    else:
        lands = dist_after == 0
        keeps = (dist_after == dist_now[:, None]) & ~lands
        # Prefer a distance-preserving detour, else back away as far as possible.
        away = np.where(lands, -1, dist_after)
        dodge = np.where(keeps.any(axis=-1), keeps.argmax(axis=-1), away.argmax(axis=-1))
        action = np.where(own_coin, chase, dodge)

    probs = np.zeros((batch, N_MOVES))
    probs[np.arange(batch), action] = 1.0
    return probs


def fixed_policy_probs(kind: FixedKind | str, obs: np.ndarray, env: str) -> np.ndarray:
    """Action distribution of a fixed strategy for a batch of observations.

    Raises:
        UnsupportedPolicyError: For tit-for-tat outside the IPD.
    """
    kind = FixedKind(kind)
    if env == "ipd":
        return _ipd_probs(kind, obs)
    if kind == FixedKind.TFT:
        raise UnsupportedPolicyError(kind, env)
    return _coin_probs(kind, obs)


def fixed_policy_action(
    kind: FixedKind | str,
    obs: np.ndarray,
    env: str,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Actions of a fixed strategy; ``rng`` is only consulted by Random."""
    probs = fixed_policy_probs(kind, obs, env)
    if FixedKind(kind) != FixedKind.RANDOM:
        return probs.argmax(axis=-1)
    gen = rng or np.random.default_rng()
    return gen.integers(probs.shape[-1], size=probs.shape[0])


@dataclass(frozen=True)
class FixedPlayer:
    """League player wrapping a fixed strategy."""

    kind: FixedKind
    env: str

    def __post_init__(self) -> None:
        if self.kind == FixedKind.TFT and self.env != "ipd":
            raise UnsupportedPolicyError(self.kind, self.env)

    @property
    def name(self) -> str:
        return str(self.kind)

    def begin(self, batch_size: int) -> None:
        return None

    def probs(self, obs: np.ndarray, memory: Any) -> tuple[np.ndarray, Any]:
        return fixed_policy_probs(self.kind, obs, self.env), memory


def get_fixed_player(name: str, env: Environment | str) -> FixedPlayer:
    """Look up a fixed strategy by name.

    Raises:
        ValueError: If the name is unknown.
        UnsupportedPolicyError: If the strategy does not exist for ``env``.
    """
    env_name = env if isinstance(env, str) else env.name
    available = [k.value for k in FixedKind]
    if name not in available:
        raise ValueError(f"Unknown fixed policy {name!r}. Available: {available}")
    return FixedPlayer(FixedKind(name), env_name)
