"""Adam and global-norm gradient clipping over named parameter dicts."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from apps.agents.networks import Params

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class AdamState:
    """First and second moment estimates plus the step count.

    Attributes:
        m:    First moments, shaped like the parameters.
        v:    Second moments, shaped like the parameters.
        step: Number of updates applied so far.
    """

    m: Params
    v: Params
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> AdamState:
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update. Inputs are not modified."""
    if set(params) != set(grads):
        raise ValueError("params and grads have different keys")
    step = state.step + 1
    m: Params = {}
    v: Params = {}
    updated: Params = {}
    c1 = 1.0 - ADAM_BETA1**step
    c2 = 1.0 - ADAM_BETA2**step
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        m[name] = ADAM_BETA1 * state.m[name] + (1.0 - ADAM_BETA1) * g
        v[name] = ADAM_BETA2 * state.v[name] + (1.0 - ADAM_BETA2) * g * g
        m_hat = m[name] / c1
        v_hat = v[name] / c2
        updated[name] = p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return updated, AdamState(m=m, v=v, step=step)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    """L2 norm of all gradients taken together, summed in sorted key order."""
    return float(np.sqrt(sum(float(np.sum(grads[k] ** 2)) for k in sorted(grads))))


def clip_by_global_norm(
    grads: Mapping[str, np.ndarray], max_norm: float
) -> tuple[Params, float]:
    """Scale gradients so their global norm is at most ``max_norm``.

    ``max_norm <= 0`` disables clipping.

    Returns:
        (clipped gradients, norm before clipping)
    """
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return dict(grads), norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm
