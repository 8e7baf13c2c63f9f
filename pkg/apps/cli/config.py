"""
Run configuration.

A run is described by a flat TOML document whose keys are snake_case
hyperparameter names. Values are layered: preset
defaults, then the file, then command-line overrides. The merged mapping is
validated once into a frozen ``RunConfig``; everything downstream works from
that object.
"""

from __future__ import annotations

import tomllib
from collections.abc import Mapping
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from apps.loqa.dice import DifferentiableOpponent, OpponentMethod
from apps.trainer.config import TrainConfig

DEFAULT_SEED = 42
SEED_SWEEP = tuple(range(42, 52))


class ConfigError(Exception):
    """Raised when a configuration key is missing, unknown or out of range."""

    def __init__(self, key: str, constraint: str) -> None:
        self.key = key
        self.constraint = constraint
        super().__init__(f"{key}: {constraint}")


class RunConfig(BaseModel):
    """Validated settings for one run."""

    model_config = ConfigDict(frozen=True, extra="forbid", strict=True)

    preset: str = Field(default="ipd", description="Preset the defaults came from")
    env: Literal["ipd", "coin"] = Field(default="ipd", description="Environment")
    grid_size: int = Field(default=3, ge=2, le=16, description="Grid Size")
    game_length: int = Field(default=50, ge=1, description="Game Length")
    batch_size: int = Field(default=2048, ge=1, description="Batch Size")
    iterations: int = Field(default=3000, ge=0, description="Training iterations")
    reward_discount: float = Field(default=0.96, ge=0.0, le=1.0, description="Reward Discount")
    differentiable_opponent_method: Literal["loaded_dice", "n_step"] = Field(
        default="n_step", description="Differentiable Opponent Method"
    )
    differentiable_opponent_discount: float = Field(
        default=0.9, ge=0.0, le=1.0, description="Differentiable Opponent Discount"
    )
    differentiable_opponent_n_step: int = Field(
        default=2, ge=1, description="Differentiable Opponent N Step"
    )
    actor_learning_rate: float = Field(default=1e-3, gt=0.0, description="Actor Learning Rate")
    critic_learning_rate: float = Field(
        default=1e-2, gt=0.0, description="Q-value / Critic Learning Rate"
    )
    target_ema_gamma: float = Field(
        default=0.99,
        ge=0.0,
        le=1.0,
        description="Critic Target Exponential Moving Average's Gamma",
    )
    epsilon_greedy: float = Field(default=0.2, ge=0.0, le=1.0, description="Epsilon Greedy")
    entropy_beta: float = Field(default=0.0, ge=0.0, description="Actor Loss Entropy Beta")
    gradient_clipping_max_norm: float = Field(
        default=0.0, ge=0.0, description="Gradient Clipping Max Norm (0 = disabled)"
    )
    actor_hidden_size: int = Field(default=128, ge=1, description="Actor Hidden Size")
    critic_hidden_size: int = Field(default=64, ge=1, description="Critic Hidden Size")
    dense_layers: int = Field(default=2, ge=0, description="Dense Layers Before GRU")
    agent_replay_buffer: bool = Field(default=False, description="Agent Replay Buffer Mode")
    agent_replay_buffer_capacity: int = Field(
        default=10_000, ge=1, description="Agent Replay Buffer Capacity"
    )
    agent_replay_buffer_update_freq: int = Field(
        default=10, ge=1, description="Agent Replay Buffer Update Freq"
    )
    self_play: bool = Field(default=False, description="Train one agent against itself")
    decentralized_critic: bool = Field(
        default=False, description="Learn a private model of the opponent's Q"
    )
    shaping: bool = Field(default=True, description="Opponent-shaping term in the actor loss")
    seed: int = Field(default=DEFAULT_SEED, ge=0, description="Master seed")
    out: str = Field(default="runs", description="Output directory")
    eval_every: int = Field(default=0, ge=0, description="Evaluation cadence (0 = off)")
    eval_episodes: int = Field(default=50, ge=1, description="Episodes per evaluation")
    checkpoint_every: int = Field(
        default=0, ge=0, description="Checkpoint cadence in iterations (0 = final only)"
    )
    budget_seconds: float = Field(default=0.0, ge=0.0, description="Wall-clock budget (0 = none)")
    record_wall_clock: bool = Field(default=False, description="Fill the wall_clock_s column")

    def train_config(self) -> TrainConfig:
        """The subset the training loop consumes."""
        return TrainConfig(
            env=self.env,
            grid_size=self.grid_size,
            game_length=self.game_length,
            batch_size=self.batch_size,
            iterations=self.iterations,
            gamma=self.reward_discount,
            opponent=DifferentiableOpponent(
                method=OpponentMethod(self.differentiable_opponent_method),
                lam=self.differentiable_opponent_discount,
                n_step=self.differentiable_opponent_n_step,
            ),
            actor_lr=self.actor_learning_rate,
            critic_lr=self.critic_learning_rate,
            target_ema=self.target_ema_gamma,
            epsilon=self.epsilon_greedy,
            entropy_beta=self.entropy_beta,
            clip_norm=self.gradient_clipping_max_norm,
            actor_hidden=self.actor_hidden_size,
            critic_hidden=self.critic_hidden_size,
            dense_layers=self.dense_layers,
            replay_buffer=self.agent_replay_buffer,
            replay_capacity=self.agent_replay_buffer_capacity,
            replay_update_freq=self.agent_replay_buffer_update_freq,
            self_play=self.self_play,
            decentralized_critic=self.decentralized_critic,
            shaping=self.shaping,
            seed=self.seed,
        )


_IPD: dict[str, Any] = {
    "env": "ipd",
    "game_length": 50,
    "batch_size": 2048,
    "iterations": 3000,
    "reward_discount": 0.96,
    "differentiable_opponent_method": "n_step",
    "differentiable_opponent_n_step": 2,
    "epsilon_greedy": 0.2,
    "entropy_beta": 0.0,
    "gradient_clipping_max_norm": 0.0,
    "agent_replay_buffer": False,
    "self_play": False,
}

_COIN: dict[str, Any] = {
    "env": "coin",
    "grid_size": 3,
    "game_length": 50,
    "batch_size": 512,
    "iterations": 6000,
    "reward_discount": 0.96,
    "differentiable_opponent_method": "loaded_dice",
    "differentiable_opponent_discount": 0.9,
    "epsilon_greedy": 0.0,
    "entropy_beta": 0.1,
    "gradient_clipping_max_norm": 1.0,
    "actor_hidden_size": 128,
    "critic_hidden_size": 64,
    "dense_layers": 2,
    "agent_replay_buffer": True,
    "agent_replay_buffer_capacity": 10_000,
    "agent_replay_buffer_update_freq": 10,
    "self_play": True,
}

PRESETS: dict[str, dict[str, Any]] = {
    "ipd": _IPD,
    "ipd-desk": {**_IPD, "batch_size": 512, "game_length": 16},
    "coin": _COIN,
    "coin-large": {**_COIN, "batch_size": 8192},
    "coin-desk": {**_COIN, "batch_size": 128, "actor_hidden_size": 64},
}


def preset_config(name: str) -> RunConfig:
    """Validated defaults of a preset."""
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}, available: {sorted(PRESETS)}")
    return RunConfig.model_validate({**PRESETS[name], "preset": name})


def _check_flat(data: Mapping[str, Any]) -> None:
    for key, value in data.items():
        if isinstance(value, dict | list):
            raise ConfigError(key, "only flat scalar values are allowed")


def parse_config(text: str, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Parse a flat TOML document into a ``RunConfig``.

    Raises:
        ConfigError: Naming the offending key and the violated constraint.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<document>", f"not valid TOML: {exc}") from exc
    _check_flat(data)
    layered = {**data, **(overrides or {})}

    env = layered.get("env", "ipd")
    name = layered.get("preset", env)
    if not isinstance(name, str) or name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}, available: {sorted(PRESETS)}")
    base = PRESETS[name]
    if "env" in layered and layered["env"] != base["env"]:
        raise ConfigError("env", f"preset {name!r} is for env {base['env']!r}")

    try:
        return RunConfig.model_validate({**base, **layered, "preset": name})
    except ValidationError as exc:
        err = exc.errors()[0]
        key = ".".join(str(part) for part in err["loc"]) or "<document>"
        raise ConfigError(key, err["msg"]) from exc


def serialize_config(config: RunConfig) -> str:
    """Flat TOML for ``config``; ``parse_config`` reads it back unchanged."""
    lines = []
    for key, value in config.model_dump().items():
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, str):
            rendered = '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        else:
            rendered = repr(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"
