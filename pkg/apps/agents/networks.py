"""
Function approximators for actors and critics.

Networks are frozen architecture descriptions; parameters live in plain
``dict[str, np.ndarray]`` so they can be snapshotted, checkpointed and
shipped to other threads. ``forward`` is written with graphdiff primitives
and therefore runs eagerly on arrays (rollouts) or on tape nodes (losses).
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import asdict, dataclass
from typing import Any, Protocol, runtime_checkable

import numpy as np

from apps.graphdiff import (
    Operand,
    add,
    concatenate,
    matvec,
    multiply,
    reshape,
    sigmoid,
    stack,
    subtract,
    tanh,
    value_of,
)

Params = dict[str, np.ndarray]
ParamsLike = Mapping[str, Operand]


class DimensionMismatchError(Exception):
    """Raised when an observation does not match a network's input size."""

    def __init__(self, expected: int, got: int) -> None:
        self.expected = expected
        self.got = got
        super().__init__(f"Observation dimension {got} does not match network input {expected}")


@runtime_checkable
class Network(Protocol):
    """Recurrent function approximator interface shared by actors and critics."""

    @property
    def kind(self) -> str: ...

    @property
    def input_dim(self) -> int: ...

    @property
    def output_dim(self) -> int: ...

    def init_params(self, rng: np.random.Generator) -> Params: ...

    def initial_hidden(self, batch_size: int) -> np.ndarray: ...

    def forward(
        self, params: ParamsLike, obs: Operand, hidden: Operand
    ) -> tuple[Operand, Operand]:
        """One step: returns (outputs over actions, next hidden state)."""
        ...

    def manifest(self) -> dict[str, Any]: ...


def _check_input(obs: Operand, expected: int) -> None:
    got = value_of(obs).shape[-1]
    if got != expected:
        raise DimensionMismatchError(expected, got)


def _uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    bound = 1.0 / np.sqrt(shape[1])
    return rng.uniform(-bound, bound, size=shape)


@dataclass(frozen=True)
class LogitActor:
    """One logit per IPD state; ``P(cooperate | s) = sigmoid(logit[s])``.

    The output is the action-logit pair ``(logit[s], 0)`` so that a softmax
    over it reproduces the sigmoid.
    """

    n_states: int = 5

    @property
    def kind(self) -> str:
        return "logits"

    @property
    def input_dim(self) -> int:
        return self.n_states

    @property
    def output_dim(self) -> int:
        return 2

    def init_params(self, rng: np.random.Generator) -> Params:
        return {"logits": np.zeros(self.n_states)}

    def initial_hidden(self, batch_size: int) -> np.ndarray:
        return np.zeros((batch_size, 0))

    def forward(
        self, params: ParamsLike, obs: Operand, hidden: Operand
    ) -> tuple[Operand, Operand]:
        _check_input(obs, self.n_states)
        row = reshape(params["logits"], (1, self.n_states))
        coop = matvec(row, obs)
        zeros = np.zeros(value_of(coop).shape)
        return concatenate([coop, zeros], axis=-1), hidden

    def manifest(self) -> dict[str, Any]:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class GruNet:
    """Dense layers, a GRU cell and a linear read-out.

    ``dense_layers`` tanh-activated dense layers map the observation to the
    hidden size, a GRU cell carries the episode memory, and one linear
    layer maps the GRU output to one value per action. The hidden state
    starts at zeros for every episode.
    """

    input_dim: int
    hidden_size: int
    output_dim: int
    dense_layers: int = 2

    @property
    def kind(self) -> str:
        return "gru"

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        h = self.hidden_size
        shapes: dict[str, tuple[int, ...]] = {}
        fan_in = self.input_dim
        for i in range(self.dense_layers):
            shapes[f"dense{i}.w"] = (h, fan_in)
            shapes[f"dense{i}.b"] = (h,)
            fan_in = h
        for gate in ("r", "z", "n"):
            shapes[f"gru.w_i{gate}"] = (h, fan_in)
            shapes[f"gru.w_h{gate}"] = (h, h)
            shapes[f"gru.b_i{gate}"] = (h,)
            shapes[f"gru.b_h{gate}"] = (h,)
        shapes["out.w"] = (self.output_dim, h)
        shapes["out.b"] = (self.output_dim,)
        return shapes

    def init_params(self, rng: np.random.Generator) -> Params:
        params: Params = {}
        for name, shape in self.param_shapes().items():
            if len(shape) == 2:
                params[name] = _uniform(rng, (shape[0], shape[1]))
            else:
                params[name] = np.zeros(shape)
        return params

    def zero_params(self) -> Params:
        return {name: np.zeros(shape) for name, shape in self.param_shapes().items()}

    def initial_hidden(self, batch_size: int) -> np.ndarray:
        return np.zeros((batch_size, self.hidden_size))

    def forward(
        self, params: ParamsLike, obs: Operand, hidden: Operand
    ) -> tuple[Operand, Operand]:
        _check_input(obs, self.input_dim)
        p = params
        x = obs
        for i in range(self.dense_layers):
            x = tanh(add(matvec(p[f"dense{i}.w"], x), p[f"dense{i}.b"]))

        def gate(name: str) -> tuple[Operand, Operand]:
            from_input = add(matvec(p[f"gru.w_i{name}"], x), p[f"gru.b_i{name}"])
            from_hidden = add(matvec(p[f"gru.w_h{name}"], hidden), p[f"gru.b_h{name}"])
            return from_input, from_hidden

        ir, hr = gate("r")
        iz, hz = gate("z")
        in_, hn = gate("n")
        r = sigmoid(add(ir, hr))
        z = sigmoid(add(iz, hz))
        n = tanh(add(in_, multiply(r, hn)))
        h_next = add(multiply(subtract(1.0, z), n), multiply(z, hidden))
        out = add(matvec(p["out.w"], h_next), p["out.b"])
        return out, h_next

    def manifest(self) -> dict[str, Any]:
        return {"kind": self.kind, **asdict(self)}


def network_from_manifest(manifest: Mapping[str, Any]) -> LogitActor | GruNet:
    """Rebuild an architecture from its ``manifest()`` dict."""
    spec = dict(manifest)
    kind = spec.pop("kind")
    if kind == "logits":
        return LogitActor(**spec)
    if kind == "gru":
        return GruNet(**spec)
    raise ValueError(f"Unknown network kind {kind!r}")


def unroll(net: Network, params: ParamsLike, obs_seq: np.ndarray) -> Operand:
    """Run ``net`` over a (B, T, D) observation sequence from a zero hidden state.

    Returns the stacked per-step outputs, shape (B, T, output_dim).
    """
    batch, horizon = obs_seq.shape[:2]
    hidden: Operand = net.initial_hidden(batch)
    outputs: list[Operand] = []
    for t in range(horizon):
        out, hidden = net.forward(params, obs_seq[:, t], hidden)
        outputs.append(out)
    return stack(outputs, axis=1)
