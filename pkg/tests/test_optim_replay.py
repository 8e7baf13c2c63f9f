"""Tests for Adam, gradient clipping and the agent replay buffer."""

from __future__ import annotations

import numpy as np
import pytest

from apps.trainer import (
    AdamState,
    EmptyReplayBufferError,
    ReplayBuffer,
    adam_step,
    clip_by_global_norm,
    global_norm,
)


def test_first_adam_step_moves_by_learning_rate() -> None:
    params = {"w": np.array([1.0, -2.0])}
    grads = {"w": np.array([0.5, -4.0])}
    updated, state = adam_step(params, grads, AdamState.zeros_like(params), lr=0.1)
    np.testing.assert_allclose(updated["w"], [0.9, -1.9], rtol=1e-6)
    assert state.step == 1
    np.testing.assert_array_equal(params["w"], [1.0, -2.0])


def test_adam_converges_on_quadratic() -> None:
    params = {"x": np.array(0.0)}
    state = AdamState.zeros_like(params)
    for _ in range(5000):
        grads = {"x": 2.0 * (params["x"] - 3.0)}
        params, state = adam_step(params, grads, state, lr=1e-2)
    assert abs(float(params["x"]) - 3.0) < 1e-6


def test_adam_rejects_mismatched_gradients() -> None:
    params = {"w": np.zeros(2)}
    with pytest.raises(ValueError, match="keys"):
        adam_step(params, {"v": np.zeros(2)}, AdamState.zeros_like(params), 0.1)
    with pytest.raises(ValueError, match="shape"):
        adam_step(params, {"w": np.zeros(3)}, AdamState.zeros_like(params), 0.1)


def test_clip_scales_to_max_norm() -> None:
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert global_norm(grads) == 5.0
    clipped, norm = clip_by_global_norm(grads, 1.0)
    assert norm == 5.0
    np.testing.assert_allclose(clipped["a"], [0.6])
    np.testing.assert_allclose(clipped["b"], [0.8])


def test_clip_leaves_small_gradients_alone() -> None:
    grads = {"a": np.array([0.3])}
    clipped, _ = clip_by_global_norm(grads, 1.0)
    np.testing.assert_array_equal(clipped["a"], [0.3])


def test_clip_disabled_by_zero() -> None:
    grads = {"a": np.array([300.0])}
    clipped, norm = clip_by_global_norm(grads, 0.0)
    assert norm == 300.0
    np.testing.assert_array_equal(clipped["a"], [300.0])


def test_replay_pushes_on_schedule_including_iteration_zero() -> None:
    buffer = ReplayBuffer(capacity=100, update_freq=10)
    pushed = [i for i in range(35) if buffer.maybe_push(i, {"w": np.array([float(i)])})]
    assert pushed == [0, 10, 20, 30]
    assert len(buffer) == buffer.pushes == 4


def test_replay_evicts_oldest_when_full(rng: np.random.Generator) -> None:
    buffer = ReplayBuffer(capacity=2, update_freq=1)
    for i in range(3):
        buffer.push({"w": np.array([float(i)])})
    assert len(buffer) == 2
    seen = {float(buffer.sample(rng)["w"][0]) for _ in range(50)}
    assert seen == {1.0, 2.0}


def test_replay_stores_copies() -> None:
    buffer = ReplayBuffer(capacity=1, update_freq=1)
    snapshot = {"w": np.array([1.0])}
    buffer.push(snapshot)
    snapshot["w"][0] = 5.0
    assert buffer.sample(np.random.default_rng(0))["w"][0] == 1.0


def test_sampling_empty_buffer_raises() -> None:
    with pytest.raises(EmptyReplayBufferError):
        ReplayBuffer().sample(np.random.default_rng(0))


def test_replay_settings_validated() -> None:
    with pytest.raises(ValueError, match="capacity"):
        ReplayBuffer(capacity=0)
    with pytest.raises(ValueError, match="update_freq"):
        ReplayBuffer(update_freq=0)


def test_replay_sampling_is_uniform() -> None:
    buffer = ReplayBuffer(capacity=4, update_freq=1)
    for i in range(4):
        buffer.push({"w": np.array([float(i)])})
    rng = np.random.default_rng(2024)
    draws = 100_000
    counts = np.bincount([int(buffer.sample(rng)["w"][0]) for _ in range(draws)], minlength=4)
    expected = draws / 4
    sigma = np.sqrt(draws * 0.25 * 0.75)
    assert np.all(np.abs(counts - expected) <= 3 * sigma)
