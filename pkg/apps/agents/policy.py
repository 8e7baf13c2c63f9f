"""
Stochastic policies over discrete actions.

The behaviour policy is the epsilon-greedy mixture
``pi_eps = (1 - eps) * pi + eps / A``. Evaluation plays with ``eps = 0``.
"""

from __future__ import annotations

import numpy as np

from apps.agents.networks import Network, ParamsLike
from apps.graphdiff import (
    Operand,
    add,
    exp,
    log,
    log_softmax,
    multiply,
    negative,
    reduce_sum,
    stack,
    value_of,
)


def mixture_log_probs(logp: Operand, epsilon: float) -> Operand:
    """``log((1 - eps) * exp(logp) + eps / A)``; identity when ``eps == 0``."""
    if epsilon == 0.0:
        return logp
    n_actions = value_of(logp).shape[-1]
    return log(add(multiply(1.0 - epsilon, exp(logp)), epsilon / n_actions))


def actor_log_probs(
    net: Network,
    params: ParamsLike,
    obs: Operand,
    hidden: Operand,
    epsilon: float = 0.0,
) -> tuple[Operand, Operand]:
    """One-step log-probabilities over actions and the next hidden state."""
    logits, hidden = net.forward(params, obs, hidden)
    return mixture_log_probs(log_softmax(logits), epsilon), hidden


def sequence_log_probs(
    net: Network,
    params: ParamsLike,
    obs_seq: np.ndarray,
    epsilon: float = 0.0,
) -> Operand:
    """Log-probabilities for a (B, T, D) observation sequence, shape (B, T, A)."""
    batch, horizon = obs_seq.shape[:2]
    hidden: Operand = net.initial_hidden(batch)
    steps: list[Operand] = []
    for t in range(horizon):
        logp, hidden = actor_log_probs(net, params, obs_seq[:, t], hidden, epsilon)
        steps.append(logp)
    return stack(steps, axis=1)


def sample_from_uniforms(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling: the first action whose cumulative mass exceeds ``u``.

    ``probs`` has shape (..., A) and ``uniforms`` the leading shape.
    """
    cdf = np.cumsum(probs, axis=-1)
    idx = (cdf <= np.asarray(uniforms)[..., None]).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1).astype(np.int64)


def behaviour_probs(probs: np.ndarray, epsilon: float) -> np.ndarray:
    """Epsilon-greedy mixture of a probability array over its last axis."""
    probs = np.asarray(probs, dtype=np.float64)
    if epsilon == 0.0:
        return probs
    return (1.0 - epsilon) * probs + epsilon / probs.shape[-1]


def sample_action(
    logp: np.ndarray,
    epsilon: float,
    rng: np.random.Generator | None = None,
    uniforms: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample from the epsilon-mixture of ``exp(logp)``.

    Either pass pre-drawn ``uniforms`` (the seeded rollout path) or an
    ``rng`` to draw them from.

    Returns:
        (actions, behaviour probabilities the actions were drawn from).
    """
    probs = behaviour_probs(np.exp(np.asarray(logp, dtype=np.float64)), epsilon)
    if uniforms is None:
        if rng is None:
            raise ValueError("sample_action needs either rng or uniforms")
        uniforms = rng.random(probs.shape[:-1])
    return sample_from_uniforms(probs, uniforms), probs


def policy_entropy(logp: Operand) -> Operand:
    """Entropy ``-sum_a p * log p`` over the last axis."""
    return negative(reduce_sum(multiply(exp(logp), logp), axis=-1))
