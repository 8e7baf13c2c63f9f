"""Minimal reverse-mode automatic differentiation over float64 arrays."""

from apps.graphdiff.check import analytic_gradient, finite_diff_check
from apps.graphdiff.primitives import (
    Operand,
    add,
    concatenate,
    discount_matrix,
    discounted_cumsum,
    exp,
    huber,
    log,
    log_softmax,
    logsumexp,
    magic_box,
    matvec,
    multiply,
    negative,
    pick,
    primitive_set,
    reduce_mean,
    reduce_sum,
    reshape,
    sigmoid,
    softmax,
    stack,
    stop_gradient,
    subtract,
    take,
    tanh,
    value_of,
)
from apps.graphdiff.tape import (
    DiffNode,
    GraphDiffError,
    NonFiniteValueError,
    NonScalarLossError,
    ShapeMismatchError,
    StaleNodeError,
    Tape,
    backward,
)

__all__ = [
    "DiffNode",
    "GraphDiffError",
    "NonFiniteValueError",
    "NonScalarLossError",
    "Operand",
    "ShapeMismatchError",
    "StaleNodeError",
    "Tape",
    "add",
    "analytic_gradient",
    "backward",
    "concatenate",
    "discount_matrix",
    "discounted_cumsum",
    "exp",
    "finite_diff_check",
    "huber",
    "log",
    "log_softmax",
    "logsumexp",
    "magic_box",
    "matvec",
    "multiply",
    "negative",
    "pick",
    "primitive_set",
    "reduce_mean",
    "reduce_sum",
    "reshape",
    "sigmoid",
    "softmax",
    "stack",
    "stop_gradient",
    "subtract",
    "take",
    "tanh",
    "value_of",
]
