"""
One-step-history Iterated Prisoner's Dilemma.

States are the five history tags START, CC, CD, DC, DD. Rewards follow the
payoff matrix below; the game has no early termination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.envs.models import HorizonExceededError, IpdState, IpdTag

# PAYOFF[a, b] = (r1, r2) with 0 = cooperate, 1 = defect.
PAYOFF = np.array(
    [
        [[-1.0, -1.0], [-3.0, 0.0]],
        [[0.0, -3.0], [-2.0, -2.0]],
    ]
)

N_STATES = len(IpdTag)

# Tag as seen by agent 2: CD and DC trade places.
_SWAP_TAG = np.array([IpdTag.START, IpdTag.CC, IpdTag.DC, IpdTag.CD, IpdTag.DD])


def ipd_reset(batch_size: int = 1) -> IpdState:
    """All episodes start in START at t=0."""
    return IpdState(tag=np.full(batch_size, IpdTag.START, dtype=np.int64), t=0)


def ipd_step(
    state: IpdState, a: np.ndarray | int, b: np.ndarray | int
) -> tuple[IpdState, np.ndarray, np.ndarray]:
    """Play one round; the next tag records ``(a, b)``."""
    a_arr = np.broadcast_to(np.asarray(a, dtype=np.int64), state.tag.shape)
    b_arr = np.broadcast_to(np.asarray(b, dtype=np.int64), state.tag.shape)
    rewards = PAYOFF[a_arr, b_arr]
    tag = 1 + 2 * a_arr + b_arr
    return IpdState(tag=tag, t=state.t + 1), rewards[..., 0], rewards[..., 1]


def ipd_encode(state: IpdState, agent: int) -> np.ndarray:
    """One-hot over the five tags, from the agent's own point of view."""
    tag = state.tag if agent == 0 else _SWAP_TAG[state.tag]
    return np.eye(N_STATES)[tag]


@dataclass(frozen=True)
class IteratedPrisonersDilemma:
    """Batched IPD following the ``Environment`` protocol."""

    game_length: int = 50

    @property
    def name(self) -> str:
        return "ipd"

    @property
    def n_actions(self) -> int:
        return 2

    @property
    def obs_dim(self) -> int:
        return N_STATES

    def reset(self, uniforms: np.ndarray) -> IpdState:
        return ipd_reset(len(uniforms))

    def step(
        self,
        state: IpdState,  # type: ignore[override]
        a: np.ndarray,
        b: np.ndarray,
        uniforms: np.ndarray,
    ) -> tuple[IpdState, np.ndarray, np.ndarray]:
        if state.t >= self.game_length:
            raise HorizonExceededError(state.t, self.game_length)
        return ipd_step(state, a, b)

    def encode(self, state: IpdState, agent: int) -> np.ndarray:  # type: ignore[override]
        return ipd_encode(state, agent)
