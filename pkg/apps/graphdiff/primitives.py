"""
Differentiable primitives.

Every primitive accepts ``DiffNode`` operands, plain numpy arrays or Python
floats. When at least one operand is a ``DiffNode`` the result is recorded
on that node's tape together with its reverse rule; otherwise the primitive
is evaluated eagerly and a plain ``np.ndarray`` is returned. Rollouts use
the eager path, loss construction the recorded one, with the same network
code.

All primitives register themselves in ``PRIMITIVES``; ``primitive_set()``
exposes the read-only catalog.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from types import MappingProxyType
from typing import TypeVar

import numpy as np

from apps.graphdiff.tape import (
    VJP,
    DiffNode,
    NonFiniteValueError,
    ShapeMismatchError,
    Tape,
)

Operand = DiffNode | np.ndarray | float
F = TypeVar("F", bound=Callable[..., Operand])

HUBER_DELTA = 1.0

PRIMITIVES: dict[str, Callable[..., Operand]] = {}


def primitive(name: str) -> Callable[[F], F]:
    """Register a primitive under ``name``."""

    def decorator(fn: F) -> F:
        PRIMITIVES[name] = fn
        return fn

    return decorator


def primitive_set() -> Mapping[str, Callable[..., Operand]]:
    """Return the catalog of registered differentiable primitives."""
    return MappingProxyType(PRIMITIVES)


# ── Plumbing ─────────────────────────────────────────────────────────────────


def value_of(x: Operand) -> np.ndarray:
    """Forward value of an operand as a float64 array."""
    if isinstance(x, DiffNode):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _tape_of(inputs: Sequence[Operand]) -> Tape | None:
    for x in inputs:
        if isinstance(x, DiffNode):
            return x.tape
    return None


def _emit(op: str, value: np.ndarray, inputs: Sequence[Operand], vjp: VJP) -> Operand:
    value = np.asarray(value, dtype=np.float64)
    if not np.isfinite(value).all():
        raise NonFiniteValueError(op)
    tape = _tape_of(inputs)
    if tape is None:
        return value
    parents = tuple(x if isinstance(x, DiffNode) else None for x in inputs)
    return tape.record(op, value, parents, vjp)


def _broadcast_shape(op: str, *shapes: tuple[int, ...]) -> tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(*shapes))
    except ValueError:
        raise ShapeMismatchError(op, shapes) from None


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _needs(x: Operand) -> bool:
    return isinstance(x, DiffNode)


# ── Elementwise arithmetic ───────────────────────────────────────────────────


@primitive("add")
def add(x: Operand, y: Operand) -> Operand:
    xv, yv = value_of(x), value_of(y)
    _broadcast_shape("add", xv.shape, yv.shape)

    def vjp(g: np.ndarray) -> tuple[np.ndarray | None, np.ndarray | None]:
        return (
            _unbroadcast(g, xv.shape) if _needs(x) else None,
            _unbroadcast(g, yv.shape) if _needs(y) else None,
        )

    return _emit("add", xv + yv, (x, y), vjp)


@primitive("subtract")
def subtract(x: Operand, y: Operand) -> Operand:
    xv, yv = value_of(x), value_of(y)
    _broadcast_shape("subtract", xv.shape, yv.shape)

    def vjp(g: np.ndarray) -> tuple[np.ndarray | None, np.ndarray | None]:
        return (
            _unbroadcast(g, xv.shape) if _needs(x) else None,
            _unbroadcast(-g, yv.shape) if _needs(y) else None,
        )

    return _emit("subtract", xv - yv, (x, y), vjp)


@primitive("multiply")
def multiply(x: Operand, y: Operand) -> Operand:
    xv, yv = value_of(x), value_of(y)
    _broadcast_shape("multiply", xv.shape, yv.shape)

    def vjp(g: np.ndarray) -> tuple[np.ndarray | None, np.ndarray | None]:
        return (
            _unbroadcast(g * yv, xv.shape) if _needs(x) else None,
            _unbroadcast(g * xv, yv.shape) if _needs(y) else None,
        )

    return _emit("multiply", xv * yv, (x, y), vjp)


@primitive("negative")
def negative(x: Operand) -> Operand:
    return _emit("negative", -value_of(x), (x,), lambda g: (-g,))


# ── Linear algebra and layout ────────────────────────────────────────────────


@primitive("matvec")
def matvec(w: Operand, x: Operand) -> Operand:
    """Matrix-vector product ``W x``, batched over the leading axes of ``x``.

    ``w`` has shape ``(m, n)``; ``x`` has shape ``(..., n)``; the result has
    shape ``(..., m)``.
    """
    wv, xv = value_of(w), value_of(x)
    if wv.ndim != 2 or xv.ndim < 1 or xv.shape[-1] != wv.shape[1]:
        raise ShapeMismatchError("matvec", (wv.shape, xv.shape))
    m, n = wv.shape

    def vjp(g: np.ndarray) -> tuple[np.ndarray | None, np.ndarray | None]:
        gw = g.reshape(-1, m).T @ xv.reshape(-1, n) if _needs(w) else None
        gx = g @ wv if _needs(x) else None
        return gw, gx

    return _emit("matvec", xv @ wv.T, (w, x), vjp)


@primitive("concatenate")
def concatenate(xs: Sequence[Operand], axis: int = -1) -> Operand:
    values = [value_of(x) for x in xs]
    try:
        out = np.concatenate(values, axis=axis)
    except ValueError:
        raise ShapeMismatchError("concatenate", [v.shape for v in values]) from None
    splits = np.cumsum([v.shape[axis] for v in values])[:-1]

    def vjp(g: np.ndarray) -> list[np.ndarray]:
        return list(np.split(g, splits, axis=axis))

    return _emit("concatenate", out, tuple(xs), vjp)


@primitive("stack")
def stack(xs: Sequence[Operand], axis: int = 0) -> Operand:
    values = [value_of(x) for x in xs]
    try:
        out = np.stack(values, axis=axis)
    except ValueError:
        raise ShapeMismatchError("stack", [v.shape for v in values]) from None

    def vjp(g: np.ndarray) -> list[np.ndarray]:
        return [np.take(g, i, axis=axis) for i in range(len(values))]

    return _emit("stack", out, tuple(xs), vjp)


@primitive("reshape")
def reshape(x: Operand, shape: tuple[int, ...]) -> Operand:
    xv = value_of(x)
    try:
        out = xv.reshape(shape)
    except ValueError:
        raise ShapeMismatchError("reshape", (xv.shape, shape)) from None
    return _emit("reshape", out, (x,), lambda g: (g.reshape(xv.shape),))


@primitive("take")
def take(x: Operand, index: int, axis: int = -1) -> Operand:
    """Select one position along ``axis`` (the axis is dropped)."""
    xv = value_of(x)
    if not -xv.shape[axis] <= index < xv.shape[axis]:
        raise ShapeMismatchError("take", (xv.shape, (index,)))
    axis = axis % xv.ndim

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros_like(xv)
        key: list[slice | int] = [slice(None)] * xv.ndim
        key[axis] = index
        out[tuple(key)] = g
        return (out,)

    return _emit("take", np.take(xv, index, axis=axis), (x,), vjp)


@primitive("pick")
def pick(x: Operand, index: np.ndarray) -> Operand:
    """Gather ``x[..., index[...]]`` along the last axis."""
    xv = value_of(x)
    idx = np.asarray(index, dtype=np.int64)
    if idx.shape != xv.shape[:-1]:
        raise ShapeMismatchError("pick", (xv.shape, idx.shape))
    expanded = idx[..., None]

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros_like(xv)
        np.put_along_axis(out, expanded, g[..., None], axis=-1)
        return (out,)

    return _emit("pick", np.take_along_axis(xv, expanded, axis=-1)[..., 0], (x,), vjp)


# ── Nonlinearities ───────────────────────────────────────────────────────────


@primitive("sigmoid")
def sigmoid(x: Operand) -> Operand:
    s = 0.5 * (1.0 + np.tanh(0.5 * value_of(x)))
    return _emit("sigmoid", s, (x,), lambda g: (g * s * (1.0 - s),))


@primitive("tanh")
def tanh(x: Operand) -> Operand:
    t = np.tanh(value_of(x))
    return _emit("tanh", t, (x,), lambda g: (g * (1.0 - t * t),))


@primitive("exp")
def exp(x: Operand) -> Operand:
    e = np.exp(value_of(x))
    return _emit("exp", e, (x,), lambda g: (g * e,))


@primitive("log")
def log(x: Operand) -> Operand:
    xv = value_of(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(xv)
    return _emit("log", out, (x,), lambda g: (g / xv,))


def _softmax_values(xv: np.ndarray, axis: int) -> np.ndarray:
    shifted = xv - xv.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _logsumexp_values(xv: np.ndarray, axis: int) -> np.ndarray:
    peak = xv.max(axis=axis, keepdims=True)
    return (peak + np.log(np.exp(xv - peak).sum(axis=axis, keepdims=True))).squeeze(axis)


@primitive("softmax")
def softmax(x: Operand, axis: int = -1) -> Operand:
    s = _softmax_values(value_of(x), axis)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return _emit("softmax", s, (x,), vjp)


@primitive("log_softmax")
def log_softmax(x: Operand, axis: int = -1) -> Operand:
    xv = value_of(x)
    out = xv - np.expand_dims(_logsumexp_values(xv, axis), axis)
    s = np.exp(out)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (g - s * g.sum(axis=axis, keepdims=True),)

    return _emit("log_softmax", out, (x,), vjp)


@primitive("logsumexp")
def logsumexp(x: Operand, axis: int = -1) -> Operand:
    xv = value_of(x)
    s = _softmax_values(xv, axis)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.expand_dims(g, axis) * s,)

    return _emit("logsumexp", _logsumexp_values(xv, axis), (x,), vjp)


@primitive("huber")
def huber(x: Operand) -> Operand:
    """Huber loss with delta 1, elementwise."""
    xv = value_of(x)
    a = np.abs(xv)
    out = np.where(a <= HUBER_DELTA, 0.5 * xv * xv, HUBER_DELTA * (a - 0.5 * HUBER_DELTA))
    slope = np.clip(xv, -HUBER_DELTA, HUBER_DELTA)
    return _emit("huber", out, (x,), lambda g: (g * slope,))


# ── Reductions ───────────────────────────────────────────────────────────────


def _expand_reduced(g: np.ndarray, shape: tuple[int, ...], axis: int | None) -> np.ndarray:
    if axis is not None:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape).copy()


@primitive("sum")
def reduce_sum(x: Operand, axis: int | None = None) -> Operand:
    xv = value_of(x)
    return _emit(
        "sum",
        xv.sum(axis=axis),
        (x,),
        lambda g: (_expand_reduced(g, xv.shape, axis),),
    )


@primitive("mean")
def reduce_mean(x: Operand, axis: int | None = None) -> Operand:
    xv = value_of(x)
    count = xv.size if axis is None else xv.shape[axis]
    return _emit(
        "mean",
        xv.mean(axis=axis),
        (x,),
        lambda g: (_expand_reduced(g, xv.shape, axis) / count,),
    )


def discount_matrix(length: int, gamma: float) -> np.ndarray:
    """``D[t, k] = gamma**(k - t)`` for ``k >= t``, else 0."""
    steps = np.arange(length)
    lag = steps[None, :] - steps[:, None]
    return np.where(lag >= 0, gamma ** np.maximum(lag, 0), 0.0)


@primitive("discounted_cumsum")
def discounted_cumsum(x: Operand, gamma: float) -> Operand:
    """Reverse discounted cumulative sum over the last (time) axis.

    ``y[..., t] = sum_{k >= t} gamma**(k - t) * x[..., k]``
    """
    xv = value_of(x)
    d = discount_matrix(xv.shape[-1], gamma)
    return _emit("discounted_cumsum", xv @ d.T, (x,), lambda g: (g @ d,))


# ── Gradient control ─────────────────────────────────────────────────────────


@primitive("stop_gradient")
def stop_gradient(x: Operand) -> Operand:
    """Identity forward; contributes nothing to ancestors on the way back."""
    return _emit("stop_gradient", value_of(x).copy(), (x,), lambda g: (None,))


@primitive("magic_box")
def magic_box(x: Operand, anchor: np.ndarray | None = None) -> Operand:
    """``exp(x - stop_gradient(x))``: evaluates to 1, differentiates like ``x``.

    With ``anchor`` the subtracted term is the given constant instead of the
    current value of ``x``. Passing the base-point value of ``x`` yields a
    surrogate whose forward value tracks perturbations, which is what
    finite-difference checks of DiCE objectives need.
    """
    held = stop_gradient(x) if anchor is None else np.asarray(anchor, dtype=np.float64)
    return exp(subtract(x, held))
