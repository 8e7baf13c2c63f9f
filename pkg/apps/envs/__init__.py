"""Benchmark environments: one-step-history IPD and the wrapped Coin Game."""

from __future__ import annotations

import numpy as np

from apps.envs.coin import CoinGame, coin_encode, coin_reset, coin_step
from apps.envs.ipd import IteratedPrisonersDilemma, ipd_encode, ipd_reset, ipd_step
from apps.envs.models import (
    CoinState,
    EnvError,
    Environment,
    IpdState,
    Trajectory,
)
from apps.envs.normalization import normalization_constant, normalized_return, wrapped_manhattan

ENV_NAMES = ("ipd", "coin")


def make_env(name: str, *, game_length: int, grid_size: int = 3) -> Environment:
    """Build an environment by name.

    Raises:
        ValueError: If the name is unknown.
    """
    if name == "ipd":
        return IteratedPrisonersDilemma(game_length=game_length)
    if name == "coin":
        return CoinGame(grid_size=grid_size, game_length=game_length)
    raise ValueError(f"Unknown env {name!r}. Available: {list(ENV_NAMES)}")


def observation_encode(state: IpdState | CoinState, agent: int) -> np.ndarray:
    """Egocentric flat observation for either environment."""
    if isinstance(state, IpdState):
        return ipd_encode(state, agent)
    return coin_encode(state, agent)


__all__ = [
    "ENV_NAMES",
    "CoinGame",
    "CoinState",
    "EnvError",
    "Environment",
    "IpdState",
    "IteratedPrisonersDilemma",
    "Trajectory",
    "coin_encode",
    "coin_reset",
    "coin_step",
    "ipd_encode",
    "ipd_reset",
    "ipd_step",
    "make_env",
    "normalization_constant",
    "normalized_return",
    "observation_encode",
    "wrapped_manhattan",
]
