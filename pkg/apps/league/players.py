"""
Player protocol: the contract every league participant implements.

Uses Protocol (structural subtyping) so players don't need to inherit from a
base class. Trained checkpoints and fixed strategies both satisfy it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, runtime_checkable

import numpy as np

from apps.agents.networks import Network, Params
from apps.envs import Environment
from apps.trainer.persist import load_actor
from apps.trainer.rollout import NetworkPolicy


class EnvMismatchError(Exception):
    """Raised when a checkpoint was trained on a different environment."""

    def __init__(self, expected: str, got: str) -> None:
        self.expected = expected
        self.got = got
        super().__init__(f"Checkpoint environment {got} does not match league {expected}")


@runtime_checkable
class Player(Protocol):
    """Interface every league participant must satisfy."""

    @property
    def name(self) -> str:
        """Label used in league reports."""
        ...

    def begin(self, batch_size: int) -> Any:
        """Per-episode memory at the start of a batch."""
        ...

    def probs(self, obs: np.ndarray, memory: Any) -> tuple[np.ndarray, Any]:
        """Greedy action probabilities (B, A) and the updated memory."""
        ...


def env_label(env: Environment) -> str:
    grid = getattr(env, "grid_size", None)
    return env.name if grid is None else f"{env.name}:{grid}"


@dataclass(frozen=True)
class CheckpointPlayer:
    """A trained actor loaded from a checkpoint file."""

    label: str
    net: Network
    params: Params
    manifest: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_path(cls, path: Path, env: Environment | None = None) -> CheckpointPlayer:
        """Load ``path``; when ``env`` is given the checkpoint must match it.

        Raises:
            CheckpointError: If the file cannot be read.
            EnvMismatchError: If the checkpoint's environment differs.
        """
        net, params, manifest = load_actor(path)
        label = f"seed{manifest.get('seed', '?')}"
        player = cls(label=label, net=net, params=params, manifest=manifest)
        if env is not None:
            player.ensure_env(env)
        return player

    def trained_on(self) -> str:
        env = str(self.manifest.get("env", "?"))
        return f"{env}:{self.manifest.get('grid_size')}" if env == "coin" else env

    def ensure_env(self, env: Environment) -> None:
        """Raise ``EnvMismatchError`` unless this actor was trained on ``env``."""
        got = self.trained_on()
        if got != env_label(env) or self.net.input_dim != env.obs_dim:
            raise EnvMismatchError(env_label(env), got)

    @property
    def name(self) -> str:
        return self.label

    def begin(self, batch_size: int) -> Any:
        return NetworkPolicy(self.net, self.params).begin(batch_size)

    def probs(self, obs: np.ndarray, memory: Any) -> tuple[np.ndarray, Any]:
        return NetworkPolicy(self.net, self.params).probs(obs, memory)
