"""
Seeding contract.

One master seed drives every random decision of a run. Streams are keyed
by ``(master_seed, purpose, *counters)`` through ``numpy.random.SeedSequence``
spawn keys and fed to the counter-based Philox bit generator, so any stream
can be regenerated without replaying the ones before it.

Rollout randomness for iteration ``i`` is one uniform block of shape
``(B, T + 1, UNIFORMS_PER_STEP)`` drawn in C order from the stream
``(seed, ROLLOUT, i)``. Row ``e`` of that block is episode ``e``'s private
stream; because Philox emits values sequentially, row ``e`` does not depend
on the batch size. Slot 0 of each step is agent 1's action draw, slot 1
agent 2's, slot 2 the coin respawn; the reset uses all four slots of the
extra row ``T``.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

UNIFORMS_PER_STEP = 4


class Purpose(IntEnum):
    ROLLOUT = 0
    INIT = 1
    REPLAY = 2
    LEAGUE = 3
    EVAL = 4


def stream(master_seed: int, purpose: Purpose, *counters: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, purpose, *counters)``."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(int(purpose), *counters))
    return np.random.Generator(np.random.Philox(seq))


def episode_uniforms(
    master_seed: int,
    counter: int,
    batch_size: int,
    horizon: int,
    purpose: Purpose = Purpose.ROLLOUT,
) -> np.ndarray:
    """Uniform block for one batch of episodes, shape (B, T + 1, UNIFORMS_PER_STEP)."""
    gen = stream(master_seed, purpose, counter)
    return gen.random((batch_size, horizon + 1, UNIFORMS_PER_STEP))
