"""Tests for run configuration parsing, presets and ablations."""

from __future__ import annotations

import pytest

from apps.cli.commands import apply_ablations
from apps.cli.config import (
    PRESETS,
    ConfigError,
    RunConfig,
    parse_config,
    preset_config,
    serialize_config,
)
from apps.loqa.dice import OpponentMethod

def test_reference_presets() -> None:
    ipd = preset_config("ipd")
    assert (ipd.batch_size, ipd.iterations, ipd.reward_discount) == (2048, 3000, 0.96)
    assert ipd.differentiable_opponent_method == "n_step"
    coin = preset_config("coin")
    assert (coin.batch_size, coin.iterations, coin.entropy_beta) == (512, 6000, 0.1)
    assert coin.agent_replay_buffer and coin.self_play
    assert preset_config("coin-large").batch_size == 8192


def test_exploration_rate_per_environment() -> None:
    assert preset_config("coin-desk").epsilon_greedy == 0.0
    assert preset_config("coin").epsilon_greedy == 0.0
    assert preset_config("coin-large").epsilon_greedy == 0.0
    assert preset_config("ipd").epsilon_greedy == 0.2
    assert preset_config("ipd-desk").epsilon_greedy == 0.2


def test_checkpoint_cadence_defaults_to_final_only() -> None:
    assert preset_config("ipd").checkpoint_every == 0


def test_every_preset_validates() -> None:
    for name in PRESETS:
        assert preset_config(name).preset == name


def test_unknown_preset() -> None:
    with pytest.raises(ConfigError) as exc_info:
        preset_config("chess")
    assert exc_info.value.key == "preset"


def test_empty_document_gives_ipd_defaults() -> None:
    assert parse_config("") == preset_config("ipd")


def test_env_selects_its_preset() -> None:
    config = parse_config('env = "coin"')
    assert config.preset == "coin"
    assert config.agent_replay_buffer


def test_file_overrides_preset_and_flags_override_file() -> None:
    text = 'preset = "ipd-desk"\nseed = 7\nbatch_size = 64\n'
    config = parse_config(text, {"seed": 9})
    assert (config.game_length, config.batch_size, config.seed) == (16, 64, 9)


def test_train_config_mapping() -> None:
    cfg = parse_config('preset = "coin-desk"\ndifferentiable_opponent_discount = 0.5\n')
    train = cfg.train_config()
    assert train.env == "coin"
    assert train.gamma == 0.96
    assert train.opponent.method == OpponentMethod.LOADED_DICE
    assert train.opponent.lam == 0.5
    assert train.actor_hidden == 64
    assert train.replay_buffer


def test_serialized_config_reads_back_unchanged() -> None:
    config = parse_config('preset = "coin-desk"\nout = "runs/a \\"b\\""\n', {"seed": 44})
    assert parse_config(serialize_config(config)) == config


@pytest.mark.parametrize(
    ("text", "key"),
    [
        ("batch_size = 0", "batch_size"),
        ("reward_discount = 1.5", "reward_discount"),
        ("grid_size = 1", "grid_size"),
        ('seed = "x"', "seed"),
        ("learning_rate = 0.1", "learning_rate"),
        ('differentiable_opponent_method = "magic"', "differentiable_opponent_method"),
        ("[train]\nseed = 1", "train"),
        ("seeds = [1, 2]", "seeds"),
        ("seed = ", "<document>"),
        ('preset = "chess"', "preset"),
        ('preset = "coin"\nenv = "ipd"', "env"),
    ],
)
def test_invalid_documents_name_the_key(text: str, key: str) -> None:
    with pytest.raises(ConfigError) as exc_info:
        parse_config(text)
    assert exc_info.value.key == key
    assert str(exc_info.value).startswith(f"{key}: ")


def test_config_is_frozen() -> None:
    config = preset_config("ipd")
    with pytest.raises(ValueError, match="frozen"):
        config.seed = 1  # type: ignore[misc]


def test_ablations_switch_components_off() -> None:
    base = preset_config("coin")
    ablated = apply_ablations(base, ["replay_buffer", "self_play", "shaping"])
    assert not (ablated.agent_replay_buffer or ablated.self_play or ablated.shaping)
    assert ablated.train_config().shaping is False
    assert base.agent_replay_buffer


def test_no_ablation_returns_same_object() -> None:
    base = preset_config("ipd")
    assert apply_ablations(base, []) is base


def test_unknown_ablation() -> None:
    with pytest.raises(ConfigError) as exc_info:
        apply_ablations(preset_config("ipd"), ["critic"])
    assert exc_info.value.key == "ablate"


def test_run_config_rejects_extra_fields() -> None:
    with pytest.raises(ValueError, match="Extra inputs"):
        RunConfig.model_validate({"colour": "red"})
