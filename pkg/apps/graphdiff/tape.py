"""
Recording tape and differentiable nodes.

A ``Tape`` records every primitive applied to a ``DiffNode`` in creation
order; ``Tape.backward`` walks the records in exact reverse order and
accumulates vector-Jacobian products into the ``grad`` slot of each node.

Values are always 64-bit float arrays. Parameters enter the tape through
``Tape.watch`` and are addressed by name, so the gradient map returned by
``backward`` has the same keys as the parameter dict that was watched.

A tape belongs to one thread. ``reset()`` bumps the generation counter and
drops all records; nodes from an older generation can no longer be used.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class GraphDiffError(Exception):
    """Base class for graphdiff errors."""


class ShapeMismatchError(GraphDiffError):
    """Raised when a primitive receives operands of incompatible shapes."""

    def __init__(self, primitive: str, shapes: Sequence[tuple[int, ...]]) -> None:
        self.primitive = primitive
        self.shapes = tuple(shapes)
        rendered = ", ".join(str(s) for s in self.shapes)
        super().__init__(f"Shape mismatch in {primitive!r}: {rendered}")


class NonFiniteValueError(GraphDiffError):
    """Raised when a primitive produces NaN or Inf."""

    def __init__(self, primitive: str) -> None:
        self.primitive = primitive
        super().__init__(f"Non-finite value produced by {primitive!r}")


class NonScalarLossError(GraphDiffError):
    """Raised when backward() is called on a non-scalar node."""

    def __init__(self, shape: tuple[int, ...]) -> None:
        self.shape = shape
        super().__init__(f"backward() needs a scalar loss, got shape {shape}")


class StaleNodeError(GraphDiffError):
    """Raised when a node from a previous tape generation is reused."""

    def __init__(self, node_generation: int, tape_generation: int) -> None:
        self.node_generation = node_generation
        self.tape_generation = tape_generation
        super().__init__(
            f"Node from generation {node_generation} used on tape "
            f"generation {tape_generation}"
        )


@dataclass(eq=False)
class DiffNode:
    """A value on a tape plus the operation that produced it.

    Attributes:
        value:      The forward value (float64 array, possibly 0-d).
        tape:       Owning tape.
        op:         Primitive name, ``"param"`` for watched leaves.
        parents:    Inputs of the primitive; ``None`` marks a constant input.
        vjp:        Reverse rule mapping the output cotangent to one
                    cotangent per input (``None`` = no contribution).
        generation: Tape generation the node was recorded in.
        grad:       Filled by ``Tape.backward``.
    """

    value: np.ndarray
    tape: Tape
    op: str
    parents: tuple[DiffNode | None, ...] = ()
    vjp: VJP | None = None
    generation: int = 0
    grad: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.value.shape)

    @property
    def ndim(self) -> int:
        return int(self.value.ndim)

    # Operator sugar; the primitives module registers the implementations.
    def __add__(self, other: object) -> DiffNode:
        from apps.graphdiff.primitives import add

        return add(self, other)  # type: ignore[arg-type,return-value]

    def __radd__(self, other: object) -> DiffNode:
        from apps.graphdiff.primitives import add

        return add(other, self)  # type: ignore[arg-type,return-value]

    def __sub__(self, other: object) -> DiffNode:
        from apps.graphdiff.primitives import subtract

        return subtract(self, other)  # type: ignore[arg-type,return-value]

    def __rsub__(self, other: object) -> DiffNode:
        from apps.graphdiff.primitives import subtract

        return subtract(other, self)  # type: ignore[arg-type,return-value]

    def __mul__(self, other: object) -> DiffNode:
        from apps.graphdiff.primitives import multiply

        return multiply(self, other)  # type: ignore[arg-type,return-value]

    def __rmul__(self, other: object) -> DiffNode:
        from apps.graphdiff.primitives import multiply

        return multiply(other, self)  # type: ignore[arg-type,return-value]

    def __neg__(self) -> DiffNode:
        from apps.graphdiff.primitives import negative

        return negative(self)  # type: ignore[return-value]


class Tape:
    """Ordered record of primitive applications.

    Usage::

        tape = Tape()
        nodes = tape.watch_all(params)
        loss = build_loss(nodes)
        grads = tape.backward(loss)
    """

    def __init__(self) -> None:
        self.records: list[DiffNode] = []
        self.parameters: dict[str, DiffNode] = {}
        self.generation = 0

    def __len__(self) -> int:
        return len(self.records)

    def watch(self, name: str, value: np.ndarray | float) -> DiffNode:
        """Register a named parameter leaf."""
        node = DiffNode(
            value=np.array(value, dtype=np.float64),
            tape=self,
            op="param",
            generation=self.generation,
        )
        self.records.append(node)
        self.parameters[name] = node
        return node

    def watch_all(self, params: Mapping[str, np.ndarray]) -> dict[str, DiffNode]:
        """Register every entry of a parameter dict, preserving its keys."""
        return {name: self.watch(name, value) for name, value in params.items()}

    def record(
        self,
        op: str,
        value: np.ndarray,
        parents: tuple[DiffNode | None, ...],
        vjp: VJP,
    ) -> DiffNode:
        """Append a primitive application. Called by the primitives module."""
        for parent in parents:
            if parent is not None and parent.generation != self.generation:
                raise StaleNodeError(parent.generation, self.generation)
        node = DiffNode(
            value=value,
            tape=self,
            op=op,
            parents=parents,
            vjp=vjp,
            generation=self.generation,
        )
        self.records.append(node)
        return node

    def backward(self, loss: DiffNode) -> dict[str, np.ndarray]:
        """Reverse-mode sweep from a scalar loss.

        Returns:
            Gradient map ``name -> d loss / d parameter`` for every watched
            parameter; parameters the loss does not depend on get zeros.

        Raises:
            NonScalarLossError: If ``loss`` is not 0-d.
            StaleNodeError:     If ``loss`` belongs to an older generation.
        """
        if loss.value.ndim != 0:
            raise NonScalarLossError(tuple(loss.value.shape))
        if loss.generation != self.generation:
            raise StaleNodeError(loss.generation, self.generation)

        for node in self.records:
            node.grad = None
        loss.grad = np.ones((), dtype=np.float64)

        stop = self.records.index(loss)
        for node in reversed(self.records[: stop + 1]):
            if node.grad is None or node.vjp is None:
                continue
            cotangents = node.vjp(node.grad)
            for parent, cotangent in zip(node.parents, cotangents, strict=True):
                if parent is None or cotangent is None:
                    continue
                parent.grad = cotangent if parent.grad is None else parent.grad + cotangent

        return {
            name: (node.grad if node.grad is not None else np.zeros_like(node.value))
            for name, node in self.parameters.items()
        }

    def reset(self) -> None:
        """Drop all records and start a new generation."""
        self.records.clear()
        self.parameters.clear()
        self.generation += 1


def backward(loss: DiffNode) -> dict[str, np.ndarray]:
    """Convenience wrapper for ``loss.tape.backward(loss)``."""
    return loss.tape.backward(loss)
