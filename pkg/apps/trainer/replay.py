"""
Agent replay buffer.

Holds snapshots of past actor parameters only; critics and optimizer state
are not stored. A snapshot is pushed at every iteration ``i`` with
``i % update_freq == 0``, iteration 0 included, so the buffer is never empty
once training has started. The oldest snapshot is evicted when the buffer is
full; sampling is uniform.
"""

from __future__ import annotations

from collections import deque

import numpy as np
import structlog

from apps.agents.networks import Params

logger = structlog.get_logger()


class EmptyReplayBufferError(Exception):
    """Raised when sampling from a buffer that holds no snapshots."""

    def __init__(self) -> None:
        super().__init__("Cannot sample from an empty replay buffer")


class ReplayBuffer:
    """Bounded FIFO of actor snapshots.

    Only actor parameters are kept, not whole agent bundles. A sampled
    snapshot is a frozen opponent: the trainer never updates it.

    Args:
        capacity:    Maximum number of stored snapshots.
        update_freq: Push period in iterations.
    """

    def __init__(self, capacity: int = 10_000, update_freq: int = 10) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if update_freq < 1:
            raise ValueError(f"update_freq must be >= 1, got {update_freq}")
        self.capacity = capacity
        self.update_freq = update_freq
        self.pushes = 0
        self._items: deque[Params] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def should_push(self, iteration: int) -> bool:
        return iteration % self.update_freq == 0

    def push(self, snapshot: Params) -> None:
        self._items.append({k: np.array(v, copy=True) for k, v in snapshot.items()})
        self.pushes += 1

    def maybe_push(self, iteration: int, snapshot: Params) -> bool:
        """Push ``snapshot`` if ``iteration`` is on the push schedule."""
        if not self.should_push(iteration):
            return False
        self.push(snapshot)
        logger.debug("replay.push", iteration=iteration, size=len(self))
        return True

    def sample(self, rng: np.random.Generator) -> Params:
        """Uniformly drawn stored snapshot.

        Raises:
            EmptyReplayBufferError: If nothing has been pushed yet.
        """
        if not self._items:
            raise EmptyReplayBufferError()
        return self._items[int(rng.integers(len(self._items)))]
