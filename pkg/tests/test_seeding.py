"""Tests for the seeded random streams."""

from __future__ import annotations

import numpy as np

from apps.envs.seeding import UNIFORMS_PER_STEP, Purpose, episode_uniforms, stream


def test_same_key_same_stream() -> None:
    a = stream(42, Purpose.ROLLOUT, 3).random(5)
    b = stream(42, Purpose.ROLLOUT, 3).random(5)
    np.testing.assert_array_equal(a, b)


def test_purpose_and_counter_separate_streams() -> None:
    base = stream(42, Purpose.ROLLOUT, 0).random(4)
    assert not np.array_equal(base, stream(42, Purpose.INIT, 0).random(4))
    assert not np.array_equal(base, stream(42, Purpose.ROLLOUT, 1).random(4))
    assert not np.array_equal(base, stream(43, Purpose.ROLLOUT, 0).random(4))


def test_episode_block_shape() -> None:
    block = episode_uniforms(0, 0, batch_size=6, horizon=10)
    assert block.shape == (6, 11, UNIFORMS_PER_STEP)
    assert np.all((block >= 0.0) & (block < 1.0))


def test_episode_rows_do_not_depend_on_batch_size() -> None:
    small = episode_uniforms(7, 2, batch_size=3, horizon=5)
    large = episode_uniforms(7, 2, batch_size=9, horizon=5)
    np.testing.assert_array_equal(small, large[:3])
