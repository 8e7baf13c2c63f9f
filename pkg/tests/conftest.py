"""
Shared pytest fixtures for loqa-lab tests.

Provides:
- Small IPD and Coin Game environments
- A seeded numpy generator
- Tiny training configurations that finish in well under a second
- A synthetic trajectory builder for loss and estimator tests
"""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np
import pytest
import structlog

from apps.envs import CoinGame, IteratedPrisonersDilemma, Trajectory
from apps.envs.seeding import Purpose, episode_uniforms
from apps.loqa.dice import DifferentiableOpponent, OpponentMethod
from apps.trainer import TrainConfig, rollout_batch
from apps.trainer.rollout import NetworkPolicy


@pytest.fixture(autouse=True)
def _reset_structlog() -> Iterator[None]:
    """The CLI binds structlog to the current stderr; undo it after each test."""
    yield
    structlog.reset_defaults()
    structlog.contextvars.clear_contextvars()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture()
def ipd_env() -> IteratedPrisonersDilemma:
    return IteratedPrisonersDilemma(game_length=4)


@pytest.fixture()
def coin_env() -> CoinGame:
    return CoinGame(grid_size=3, game_length=4)


@pytest.fixture()
def ipd_config() -> TrainConfig:
    """Two learners on a short IPD."""
    return TrainConfig(
        env="ipd",
        game_length=4,
        batch_size=8,
        iterations=3,
        opponent=DifferentiableOpponent(OpponentMethod.N_STEP, n_step=2),
        critic_hidden=8,
        dense_layers=1,
        seed=42,
    )


@pytest.fixture()
def coin_config() -> TrainConfig:
    """Self-play with a replay buffer on a short 3x3 Coin Game."""
    return TrainConfig(
        env="coin",
        grid_size=3,
        game_length=4,
        batch_size=4,
        iterations=3,
        actor_hidden=8,
        critic_hidden=8,
        dense_layers=1,
        entropy_beta=0.1,
        clip_norm=1.0,
        replay_buffer=True,
        replay_update_freq=1,
        self_play=True,
        seed=42,
    )


def random_trajectory(
    env: IteratedPrisonersDilemma | CoinGame,
    net: object,
    params: dict[str, np.ndarray],
    batch_size: int = 3,
    seed: int = 7,
    epsilon: float = 0.2,
) -> Trajectory:
    """Self-play trajectory of ``net`` driven by the rollout stream of ``seed``."""
    policy = NetworkPolicy(net, params)  # type: ignore[arg-type]
    block = episode_uniforms(seed, 0, batch_size, env.game_length, Purpose.ROLLOUT)
    return rollout_batch(env, policy, policy, epsilon, block)
