"""Wall-clock budget enforcement for training runs.

Tracks elapsed time since the run started and raises when a per-run
ceiling is exceeded.
"""

from __future__ import annotations

import time
from collections.abc import Callable

import structlog

logger = structlog.get_logger()


class BudgetExceededError(Exception):
    """Raised when a run exceeds its wall-clock budget."""

    def __init__(self, elapsed: float, limit: float) -> None:
        self.elapsed = elapsed
        self.limit = limit
        super().__init__(
            f"Wall-clock budget exceeded: {elapsed:.1f}s elapsed, {limit:.1f}s limit"
        )


class BudgetTracker:
    """Measures elapsed seconds and enforces a ceiling.

    Args:
        max_seconds: Maximum allowed run time. 0.0 means unlimited.
        clock:       Monotonic time source, injectable for tests.
    """

    def __init__(
        self, max_seconds: float = 0.0, clock: Callable[[], float] = time.monotonic
    ) -> None:
        self.max_seconds = max_seconds
        self._clock = clock
        self._start = clock()

    @property
    def elapsed(self) -> float:
        return self._clock() - self._start

    @property
    def remaining(self) -> float:
        """Remaining budget. Returns float('inf') if unlimited."""
        if self.max_seconds <= 0:
            return float("inf")
        return max(0.0, self.max_seconds - self.elapsed)

    @property
    def exhausted(self) -> bool:
        return self.max_seconds > 0 and self.elapsed > self.max_seconds

    def check(self) -> None:
        """Raise BudgetExceededError if the budget is exhausted."""
        if self.exhausted:
            elapsed = self.elapsed
            logger.warning("budget.exceeded", elapsed=elapsed, limit=self.max_seconds)
            raise BudgetExceededError(elapsed, self.max_seconds)
