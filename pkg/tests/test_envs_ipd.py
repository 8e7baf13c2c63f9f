"""Tests for the Iterated Prisoner's Dilemma."""

from __future__ import annotations

import numpy as np
import pytest

from apps.envs import (
    IteratedPrisonersDilemma,
    coin_encode,
    coin_reset,
    ipd_encode,
    ipd_reset,
    ipd_step,
    make_env,
    observation_encode,
)
from apps.envs.ipd import PAYOFF
from apps.envs.models import HorizonExceededError, IpdAction, IpdState, IpdTag


def test_payoff_matrix() -> None:
    assert tuple(PAYOFF[IpdAction.C, IpdAction.C]) == (-1.0, -1.0)
    assert tuple(PAYOFF[IpdAction.C, IpdAction.D]) == (-3.0, 0.0)
    assert tuple(PAYOFF[IpdAction.D, IpdAction.C]) == (0.0, -3.0)
    assert tuple(PAYOFF[IpdAction.D, IpdAction.D]) == (-2.0, -2.0)


def test_reset_starts_every_episode_in_start() -> None:
    state = ipd_reset(3)
    assert state.t == 0
    assert np.all(state.tag == IpdTag.START)


def test_step_records_joint_action_and_rewards() -> None:
    state, r1, r2 = ipd_step(ipd_reset(4), np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]))
    assert state.t == 1
    np.testing.assert_array_equal(
        state.tag, [IpdTag.CC, IpdTag.CD, IpdTag.DC, IpdTag.DD]
    )
    np.testing.assert_array_equal(r1, [-1.0, -3.0, 0.0, -2.0])
    np.testing.assert_array_equal(r2, [-1.0, 0.0, -3.0, -2.0])


def test_encoding_is_egocentric() -> None:
    state, _, _ = ipd_step(ipd_reset(1), 0, 1)
    assert int(np.argmax(ipd_encode(state, 0))) == IpdTag.CD
    assert int(np.argmax(ipd_encode(state, 1))) == IpdTag.DC
    assert ipd_encode(state, 0).shape == (1, 5)


def test_start_tag_only_at_time_zero() -> None:
    with pytest.raises(ValueError, match="START"):
        IpdState(tag=np.array([IpdTag.START]), t=2)
    with pytest.raises(ValueError, match="START"):
        IpdState(tag=np.array([IpdTag.CC]), t=0)


def test_stepping_past_game_length_raises(ipd_env: IteratedPrisonersDilemma) -> None:
    uniforms = np.zeros((2, 4))
    state = ipd_env.reset(uniforms)
    for _ in range(ipd_env.game_length):
        state, _, _ = ipd_env.step(state, np.zeros(2), np.zeros(2), uniforms)
    with pytest.raises(HorizonExceededError) as exc_info:
        ipd_env.step(state, np.zeros(2), np.zeros(2), uniforms)
    assert exc_info.value.game_length == 4


def test_make_env_by_name() -> None:
    env = make_env("ipd", game_length=7)
    assert env.name == "ipd"
    assert env.game_length == 7
    assert env.obs_dim == 5
    assert env.n_actions == 2


def test_make_env_unknown_name() -> None:
    with pytest.raises(ValueError, match="Available"):
        make_env("chess", game_length=5)


def test_observation_encode_dispatches_on_state_type(rng: np.random.Generator) -> None:
    ipd_state = ipd_reset(batch_size=2)
    np.testing.assert_array_equal(observation_encode(ipd_state, 1), ipd_encode(ipd_state, 1))
    coin_state = coin_reset(3, rng, batch_size=2)
    np.testing.assert_array_equal(observation_encode(coin_state, 0), coin_encode(coin_state, 0))
