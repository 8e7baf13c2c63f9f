"""
Grid-size invariant returns for the Coin Game.

Per-step returns shrink as the grid grows because coins are further away.
Multiplying by the largest wrapped distance an agent can be from the coin
(centre-to-corner Manhattan distance on the torus) puts returns from
different grid sizes on one scale.
"""

from __future__ import annotations

import numpy as np

from apps.envs.models import InvalidGridSizeError


def wrapped_manhattan(
    p: np.ndarray | tuple[int, int], q: np.ndarray | tuple[int, int], g: int
) -> int | np.ndarray:
    """Manhattan distance on a ``g x g`` torus; vectorized over leading axes."""
    delta = np.abs(np.asarray(p, dtype=np.int64) - np.asarray(q, dtype=np.int64))
    dist = np.minimum(delta, g - delta).sum(axis=-1)
    return int(dist) if dist.ndim == 0 else dist


def normalization_constant(g: int) -> int:
    """Wrapped distance between the centre ``(g//2, g//2)`` and corner ``(0, 0)``."""
    if g < 2:
        raise InvalidGridSizeError(g)
    center = (g // 2, g // 2)
    return int(wrapped_manhattan(center, (0, 0), g))


def normalized_return(avg_step_return: float, g: int) -> float:
    """Average per-step return scaled by ``normalization_constant(g)``."""
    return float(avg_step_return) * normalization_constant(g)
