"""
Action-value critics, TD targets and advantages.

Each agent keeps an online critic ``Q_phi`` and a target critic
``Q_phi_target`` whose parameters track the online ones by exponential
moving average. State values are expectations of Q under the
epsilon-greedy behaviour policy; advantages are one-step TD errors with a
zero bootstrap after the last step.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from apps.agents.networks import Network, Params, ParamsLike, unroll
from apps.graphdiff import (
    Operand,
    huber,
    multiply,
    pick,
    reduce_mean,
    reduce_sum,
    subtract,
    value_of,
)


def q_values(net: Network, params: ParamsLike, obs_seq: np.ndarray) -> Operand:
    """Q-values for every action along a (B, T, D) sequence, shape (B, T, A)."""
    return unroll(net, params, obs_seq)


def state_value(q: Operand, probs: Operand) -> Operand:
    """``V(s) = sum_a pi(a | s) * Q(s, a)`` over the last axis."""
    return reduce_sum(multiply(probs, q), axis=-1)


def td0_advantage(rewards: np.ndarray, values: np.ndarray, gamma: float) -> np.ndarray:
    """``A_t = r_t + gamma * V_{t+1} - V_t`` with ``V_T = 0``.

    ``rewards`` and ``values`` both have shape (B, T).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise ValueError(f"rewards {rewards.shape} and values {values.shape} differ")
    next_values = np.zeros_like(values)
    next_values[:, :-1] = values[:, 1:]
    return rewards + gamma * next_values - values


def huber_td_loss(
    q_taken: Operand,
    target_taken: np.ndarray,
    rewards: np.ndarray,
    gamma: float,
    weights: np.ndarray | None = None,
) -> Operand:
    """Huber loss on one-step SARSA residuals, summed over time.

    ``residual_t = r_t + gamma * Q_target(s_{t+1}, a_{t+1}) - Q(s_t, a_t)``
    for ``t = 0 .. T-2``. ``target_taken`` is treated as a constant. The
    per-episode sums are averaged over the batch, or weighted by
    ``weights`` (which should sum to one).
    """
    target = np.asarray(target_taken, dtype=np.float64)
    batch, horizon = target.shape
    bootstrap = np.zeros_like(target)
    bootstrap[:, :-1] = target[:, 1:]
    mask = np.ones((batch, horizon))
    mask[:, -1] = 0.0
    goal = np.asarray(rewards, dtype=np.float64) + gamma * bootstrap
    per_step = multiply(huber(subtract(goal, q_taken)), mask)
    per_episode = reduce_sum(per_step, axis=-1)
    if weights is None:
        return reduce_mean(per_episode)
    return reduce_sum(multiply(per_episode, np.asarray(weights, dtype=np.float64)))


def taken_values(q: Operand, actions: np.ndarray) -> Operand:
    """``Q(s_t, a_t)`` for the actions actually played, shape (B, T)."""
    return pick(q, actions)


def ema_update(
    target: Mapping[str, np.ndarray], online: Mapping[str, np.ndarray], decay: float
) -> Params:
    """``target <- decay * target + (1 - decay) * online``."""
    if set(target) != set(online):
        raise ValueError("target and online parameters have different keys")
    return {name: decay * target[name] + (1.0 - decay) * online[name] for name in target}


def expected_values(q: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Eager ``state_value`` for plain arrays."""
    return np.asarray(value_of(state_value(q, probs)))
