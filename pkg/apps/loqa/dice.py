"""
Differentiable opponent returns.

``Q_hat(s_t, b_t)`` is the opponent's discounted return from step ``t``,
made differentiable in the shaping agent's parameters with loaded-DiCE
corrections. For every pair ``t <= k``::

    w[t, k] = sum_{t <= j <= k} lam**(k - j) * log pi(a_j | s_j)
    v[t, k] = w[t, k] - log pi(a_k | s_k)          (= lam * w[t, k-1])
    Q_hat[t] = G[t] + sum_{k >= t} gamma**(k - t) * A[k] * (box(w[t, k]) - box(v[t, k]))

where ``G`` is the plain discounted return of the opponent's rewards,
``A`` the opponent's advantages and ``box(x) = exp(x - stop_gradient(x))``.
Each box evaluates to exactly 1, so the forward value of ``Q_hat`` is ``G``
bit for bit, while the first-order gradient is
``sum_k gamma**(k - t) * A[k] * grad log pi(a_k | s_k)``.

Only the shaper's actions from ``t`` onwards carry credit; earlier actions
are conditioning context of ``Q_hat(s_t, b_t)``. The n-step variant keeps
the credit window to ``k < t + n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from apps.graphdiff import (
    Operand,
    add,
    discounted_cumsum,
    magic_box,
    matvec,
    multiply,
    reduce_sum,
    reshape,
    subtract,
    take,
    value_of,
)


class LoqaError(Exception):
    """Base class for opponent-shaping errors."""


class ReturnIndexError(LoqaError):
    """Raised when asking for a differentiable return past the horizon."""

    def __init__(self, t: int, horizon: int) -> None:
        self.t = t
        self.horizon = horizon
        super().__init__(f"Return index {t} outside horizon {horizon}")


class OpponentMethod(StrEnum):
    LOADED_DICE = "loaded_dice"
    N_STEP = "n_step"


@dataclass(frozen=True)
class DifferentiableOpponent:
    """How the opponent's return is made differentiable.

    Attributes:
        method: Full-horizon loaded DiCE, or the same truncated to ``n_step``.
        lam:    Dependency discount of the loaded-DiCE weights.
        n_step: Credit window length for ``N_STEP``.
    """

    method: OpponentMethod = OpponentMethod.LOADED_DICE
    lam: float = 0.9
    n_step: int = 2

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.n_step < 1:
            raise ValueError(f"n_step must be >= 1, got {self.n_step}")

    @property
    def window(self) -> int | None:
        return self.n_step if self.method == OpponentMethod.N_STEP else None


def _live(horizon: int, window: int | None) -> tuple[np.ndarray, np.ndarray]:
    steps = np.arange(horizon)
    lag = steps[None, :] - steps[:, None]
    live = lag >= 0
    if window is not None:
        live &= lag < window
    return live, lag


def dependency_matrices(
    horizon: int, lam: float, window: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Linear maps from log-probs (T,) to flattened ``w`` and ``v`` (T*T,).

    Row ``t * T + k`` of the inclusive matrix holds ``lam**(k - j)`` at
    column ``j`` for ``t <= j <= k``; the exclusive matrix drops ``j == k``.
    """
    t, k, j = np.meshgrid(*(np.arange(horizon),) * 3, indexing="ij")
    live = (t <= j) & (j <= k)
    if window is not None:
        live &= k < t + window
    inclusive = np.where(live, lam ** np.maximum(k - j, 0), 0.0)
    exclusive = np.where(live & (j < k), inclusive, 0.0)
    size = horizon * horizon
    return inclusive.reshape(size, horizon), exclusive.reshape(size, horizon)


def correction_weights(
    advantages: np.ndarray, gamma: float, window: int | None = None
) -> np.ndarray:
    """``gamma**(k - t) * A[k]`` on the live ``(t, k)`` pairs, shape (B, T, T)."""
    advantages = np.asarray(advantages, dtype=np.float64)
    live, lag = _live(advantages.shape[-1], window)
    disc = np.where(live, gamma ** np.maximum(lag, 0), 0.0)
    return disc[None, :, :] * advantages[:, None, :]


def differentiable_returns(
    log_probs: Operand,
    opp_rewards: np.ndarray,
    opp_advantages: np.ndarray,
    gamma: float,
    opponent: DifferentiableOpponent,
    *,
    dice: bool = True,
    anchor: np.ndarray | None = None,
) -> Operand:
    """``Q_hat`` for every step at once, shape (B, T).

    Args:
        log_probs:      Shaper's log-probabilities of its taken actions, (B, T).
        opp_rewards:    Opponent rewards, (B, T).
        opp_advantages: Advantages of the opponent's reward stream, (B, T).
        gamma:          Reward discount.
        opponent:       Differentiation method and its parameters.
        dice:           When False the plain return is returned (no gradient).
        anchor:         Base-point log-probs; replaces the stop-gradient in the
                        magic boxes so the forward value follows perturbations
                        (finite-difference checks).
    """
    rewards = np.asarray(opp_rewards, dtype=np.float64)
    batch, horizon = rewards.shape
    returns = np.asarray(value_of(discounted_cumsum(rewards, gamma)))
    if not dice:
        return returns

    inclusive, exclusive = dependency_matrices(horizon, opponent.lam, opponent.window)
    cube = (batch, horizon, horizon)
    w = reshape(matvec(inclusive, log_probs), cube)
    v = reshape(matvec(exclusive, log_probs), cube)
    anchor_w = anchor_v = None
    if anchor is not None:
        anchor = np.asarray(anchor, dtype=np.float64)
        anchor_w = (anchor @ inclusive.T).reshape(cube)
        anchor_v = (anchor @ exclusive.T).reshape(cube)

    weights = correction_weights(opp_advantages, gamma, opponent.window)
    boxes = subtract(magic_box(w, anchor_w), magic_box(v, anchor_v))
    corrections = reduce_sum(multiply(boxes, weights), axis=-1)
    return add(returns, corrections)


def differentiable_return(
    log_probs: Operand,
    opp_rewards: np.ndarray,
    opp_advantages: np.ndarray,
    gamma: float,
    opponent: DifferentiableOpponent,
    t: int,
) -> Operand:
    """``Q_hat(s_t, b_t)`` for one step, shape (B,).

    Raises:
        ReturnIndexError: If ``t`` is not in ``[0, T)``.
    """
    horizon = np.asarray(opp_rewards).shape[-1]
    if not 0 <= t < horizon:
        raise ReturnIndexError(t, horizon)
    returns = differentiable_returns(log_probs, opp_rewards, opp_advantages, gamma, opponent)
    return take(returns, t, axis=-1)
