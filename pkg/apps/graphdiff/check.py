"""Central finite-difference oracle for reverse-mode gradients."""

from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np
import structlog

from apps.graphdiff.primitives import Operand, value_of
from apps.graphdiff.tape import DiffNode, Tape

logger = structlog.get_logger()

ScalarFn = Callable[[Mapping[str, Operand]], Operand]


def analytic_gradient(
    f: ScalarFn, params: Mapping[str, np.ndarray]
) -> tuple[float, dict[str, np.ndarray]]:
    """Evaluate ``f`` on a fresh tape and return (value, gradient map)."""
    tape = Tape()
    nodes = tape.watch_all(params)
    out = f(nodes)
    if not isinstance(out, DiffNode):
        return float(value_of(out)), {k: np.zeros_like(v) for k, v in params.items()}
    return float(out.value), tape.backward(out)


def finite_diff_check(
    f: ScalarFn,
    params: Mapping[str, np.ndarray],
    eps: float = 1e-4,
) -> float:
    """Compare reverse-mode gradients of ``f`` with central differences.

    ``f`` must be written with graphdiff primitives so it runs both on
    watched nodes (analytic pass) and on plain arrays (perturbed passes).

    Returns:
        ``max |analytic - central| / (|analytic| + |central| + 1e-12)``
        over every coordinate of every parameter.
    """
    base = {name: np.array(value, dtype=np.float64) for name, value in params.items()}
    _, analytic = analytic_gradient(f, base)

    worst = 0.0
    worst_at: tuple[str, int] | None = None
    for name, value in base.items():
        flat = value.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            upper = float(value_of(f(base)))
            flat[i] = original - eps
            lower = float(value_of(f(base)))
            flat[i] = original
            central = (upper - lower) / (2.0 * eps)
            exact = float(analytic[name].reshape(-1)[i])
            err = abs(exact - central) / (abs(exact) + abs(central) + 1e-12)
            if err > worst:
                worst, worst_at = err, (name, i)

    logger.debug("graphdiff.finite_diff_check", max_rel_err=worst, worst_at=worst_at)
    return worst
