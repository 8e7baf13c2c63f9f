"""Tests for wall-clock budget enforcement."""

import itertools
from collections.abc import Callable

import pytest

from apps.trainer import BudgetExceededError, BudgetTracker


def _clock(*ticks: float) -> Callable[[], float]:
    values = iter(ticks)
    return lambda: next(values)


def test_budget_allows_within_limit() -> None:
    bt = BudgetTracker(max_seconds=10.0, clock=_clock(0.0, 5.0, 5.0))
    assert bt.remaining == 5.0
    bt.check()


def test_budget_raises_when_exceeded() -> None:
    bt = BudgetTracker(max_seconds=1.0, clock=_clock(0.0, 1.5, 1.5))
    with pytest.raises(BudgetExceededError):
        bt.check()


def test_budget_unlimited_when_zero() -> None:
    bt = BudgetTracker(max_seconds=0.0, clock=itertools.count(step=1000).__next__)
    bt.check()
    assert not bt.exhausted


def test_budget_tracks_elapsed_time() -> None:
    bt = BudgetTracker(max_seconds=5.0, clock=_clock(10.0, 12.0, 14.0, 16.0, 16.0))
    assert bt.elapsed == 2.0
    assert bt.remaining == 1.0
    with pytest.raises(BudgetExceededError) as exc_info:
        bt.check()
    assert exc_info.value.elapsed == 6.0


def test_budget_error_has_metadata() -> None:
    err = BudgetExceededError(elapsed=5.0, limit=3.0)
    assert err.elapsed == 5.0
    assert err.limit == 3.0
    assert "5.0s elapsed" in str(err)


def test_remaining_returns_inf_when_unlimited() -> None:
    bt = BudgetTracker(max_seconds=0.0)
    assert bt.remaining == float("inf")
