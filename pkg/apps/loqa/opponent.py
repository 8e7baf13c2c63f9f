"""
Opponent policy approximation from action values.

The opponent is modelled as a softmax over its action values where the
value of the action it actually took is replaced by the differentiable
estimate ``Q_hat``::

    pi_hat(b | s) = exp(Q_hat(s, b)) / (exp(Q_hat(s, b)) + sum_{b' != b} exp(Q(s, b')))

The critic values ``Q(s, b')`` are constants; gradient reaches the shaping
agent only through ``Q_hat``.
"""

from __future__ import annotations

import numpy as np

from apps.graphdiff import (
    Operand,
    add,
    exp,
    log_softmax,
    multiply,
    pick,
    reshape,
    value_of,
)


def _approx_logits(q_hat: Operand, critic_q: Operand, actions: np.ndarray) -> Operand:
    q = np.asarray(value_of(critic_q), dtype=np.float64)
    idx = np.asarray(actions, dtype=np.int64)
    onehot = np.eye(q.shape[-1])[idx]
    column = reshape(q_hat, (*value_of(q_hat).shape, 1))
    return add(q * (1.0 - onehot), multiply(onehot, column))


def opponent_log_policy_approx(q_hat: Operand, critic_q: Operand, actions: np.ndarray) -> Operand:
    """``log pi_hat(b | s)`` for the taken opponent actions, log-sum-exp stabilized.

    Shapes: ``q_hat`` (...), ``critic_q`` (..., A), ``actions`` (...).
    """
    idx = np.asarray(actions, dtype=np.int64)
    return pick(log_softmax(_approx_logits(q_hat, critic_q, idx)), idx)


def opponent_policy_approx(q_hat: Operand, critic_q: Operand, actions: np.ndarray) -> Operand:
    """``pi_hat(b | s)`` for the taken opponent actions."""
    return exp(opponent_log_policy_approx(q_hat, critic_q, actions))


def implied_distribution(q_hat: Operand, critic_q: Operand, actions: np.ndarray) -> np.ndarray:
    """Full distribution over opponent actions implied by the approximation."""
    logits = value_of(_approx_logits(q_hat, critic_q, np.asarray(actions, dtype=np.int64)))
    return np.exp(value_of(log_softmax(logits)))
