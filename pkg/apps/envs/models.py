"""
Domain types shared by the environments, the losses and the evaluators.

``Trajectory`` is the only structure that crosses package boundaries:
rollouts produce it, the critic and actor losses consume it, the league
summarizes it. All arrays carry a leading batch axis ``B`` and a time axis
``T``; every episode in a batch advances in lockstep.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Protocol, runtime_checkable

import numpy as np


class EnvError(Exception):
    """Base class for environment errors."""


class InvalidGridSizeError(EnvError):
    """Raised for Coin Game grids smaller than 2x2."""

    def __init__(self, grid_size: int) -> None:
        self.grid_size = grid_size
        super().__init__(f"Grid size must be >= 2, got {grid_size}")


class HorizonExceededError(EnvError):
    """Raised when stepping an episode that already reached its length."""

    def __init__(self, t: int, game_length: int) -> None:
        self.t = t
        self.game_length = game_length
        super().__init__(f"Step {t} is past the game length {game_length}")


class IpdAction(IntEnum):
    C = 0
    D = 1


class IpdTag(IntEnum):
    """One-step history of the IPD, written as (agent 1 move, agent 2 move)."""

    START = 0
    CC = 1
    CD = 2
    DC = 3
    DD = 4


class Move(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


class CoinColor(IntEnum):
    """Red belongs to agent 1, blue to agent 2."""

    RED = 0
    BLUE = 1


# (row, col) displacement per Move, indexed by Move value.
MOVE_DELTAS = np.array([[-1, 0], [1, 0], [0, -1], [0, 1]], dtype=np.int64)
INVERSE_MOVE = (Move.DOWN, Move.UP, Move.RIGHT, Move.LEFT)


@dataclass(frozen=True)
class IpdState:
    """Batched IPD state.

    Attributes:
        tag: ``IpdTag`` value per episode, shape (B,).
        t:   Step index shared by the batch.
    """

    tag: np.ndarray
    t: int = 0

    def __post_init__(self) -> None:
        if self.t == 0 and np.any(self.tag != IpdTag.START):
            raise ValueError("IPD state at t=0 must be START")
        if self.t > 0 and np.any(self.tag == IpdTag.START):
            raise ValueError("IPD state after t=0 cannot be START")


@dataclass(frozen=True)
class CoinState:
    """Batched Coin Game state.

    Attributes:
        grid_size:    Side length ``g`` of the wrapped grid.
        pos1, pos2:   Agent positions, shape (B, 2), ``(row, col)``.
        coin_pos:     Coin position, shape (B, 2).
        coin_color:   ``CoinColor`` per episode, shape (B,).
        prev_actions: Previous joint action, shape (B, 2); -1 before the first step.
        t:            Step index shared by the batch.
    """

    grid_size: int
    pos1: np.ndarray
    pos2: np.ndarray
    coin_pos: np.ndarray
    coin_color: np.ndarray
    prev_actions: np.ndarray
    t: int = 0

    def __post_init__(self) -> None:
        g = self.grid_size
        for arr in (self.pos1, self.pos2, self.coin_pos):
            if np.any(arr < 0) or np.any(arr >= g):
                raise ValueError(f"Position outside the {g}x{g} grid")

    @property
    def batch_size(self) -> int:
        return int(self.pos1.shape[0])


@dataclass(frozen=True)
class Seat:
    """One agent's egocentric view of a ``Trajectory``."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    probs: np.ndarray
    other_obs: np.ndarray
    other_actions: np.ndarray
    other_rewards: np.ndarray
    other_probs: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """A batch of episodes of equal length ``T``.

    Attributes:
        obs1, obs2:         Egocentric observations, shape (B, T, D).
        actions1, actions2: Actions ``a_t`` and ``b_t``, shape (B, T).
        rewards1, rewards2: Rewards, shape (B, T).
        probs1, probs2:     Behaviour-policy probabilities the actions were
                            sampled from, shape (B, T, A).
        terminal:           True at the last step of each episode, shape (B, T).
    """

    obs1: np.ndarray
    obs2: np.ndarray
    actions1: np.ndarray
    actions2: np.ndarray
    rewards1: np.ndarray
    rewards2: np.ndarray
    probs1: np.ndarray
    probs2: np.ndarray
    terminal: np.ndarray

    def __post_init__(self) -> None:
        shape = self.actions1.shape
        if len(shape) != 2:
            raise ValueError(f"actions must have shape (B, T), got {shape}")
        for name in ("actions2", "rewards1", "rewards2", "terminal"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("obs1", "obs2", "probs1", "probs2"):
            if getattr(self, name).shape[:2] != shape:
                raise ValueError(f"{name} does not share the (B, T) axes {shape}")
        if not (np.isfinite(self.rewards1).all() and np.isfinite(self.rewards2).all()):
            raise ValueError("rewards must be finite")

    @property
    def batch_size(self) -> int:
        return int(self.actions1.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.actions1.shape[1])

    @property
    def n_actions(self) -> int:
        return int(self.probs1.shape[-1])

    def seat(self, agent: int) -> Seat:
        """Egocentric view for agent 0 (first seat) or 1 (second seat)."""
        if agent == 0:
            return Seat(
                self.obs1, self.actions1, self.rewards1, self.probs1,
                self.obs2, self.actions2, self.rewards2, self.probs2,
            )
        if agent == 1:
            return Seat(
                self.obs2, self.actions2, self.rewards2, self.probs2,
                self.obs1, self.actions1, self.rewards1, self.probs1,
            )
        raise ValueError(f"agent must be 0 or 1, got {agent}")


@runtime_checkable
class Environment(Protocol):
    """Batched two-player environment driven by pre-drawn uniforms.

    Every source of randomness is a column of the ``uniforms`` array the
    caller passes in, so an episode's behaviour is a pure function of its
    uniform stream (see ``apps.envs.seeding``).
    """

    @property
    def name(self) -> str: ...

    @property
    def n_actions(self) -> int: ...

    @property
    def obs_dim(self) -> int: ...

    @property
    def game_length(self) -> int: ...

    def reset(self, uniforms: np.ndarray) -> IpdState | CoinState:
        """Start ``len(uniforms)`` episodes; ``uniforms`` has shape (B, U)."""
        ...

    def step(
        self,
        state: IpdState | CoinState,
        a: np.ndarray,
        b: np.ndarray,
        uniforms: np.ndarray,
    ) -> tuple[IpdState | CoinState, np.ndarray, np.ndarray]:
        """Advance every episode by one joint action."""
        ...

    def encode(self, state: IpdState | CoinState, agent: int) -> np.ndarray:
        """Egocentric flat observation for agent 0 or 1, shape (B, obs_dim)."""
        ...
