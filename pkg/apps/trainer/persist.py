"""Checkpoint files for learners: one ``.npz`` per agent bundle."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path
from typing import Any

import structlog

from apps.agents.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from apps.agents.networks import Network, Params, network_from_manifest
from apps.trainer.config import TrainConfig
from apps.trainer.loop import AgentBundle, TrainState, init_train_state

logger = structlog.get_logger()


def checkpoint_manifest(
    state: TrainState, agent: int, *, partial: bool, run_hash: str
) -> dict[str, Any]:
    """Metadata stored next to a learner's arrays."""
    cfg = state.config
    return {
        "env": cfg.env,
        "grid_size": cfg.grid_size,
        "game_length": cfg.game_length,
        "seed": cfg.seed,
        "agent": agent,
        "iteration": state.iteration,
        "partial": partial,
        "config_hash": run_hash,
        "actor_net": state.actor_net.manifest(),
        "critic_net": state.critic_net.manifest(),
        "optimizer_steps": state.agents[agent].optimizer_steps(),
        "opponent": {k: str(v) for k, v in asdict(cfg.opponent).items()},
    }


def save_state(
    state: TrainState,
    directory: Path,
    *,
    partial: bool = False,
    run_hash: str = "",
    suffix: str = "",
) -> list[Path]:
    """Write ``agent<k><suffix>.npz`` for every learner."""
    paths = []
    for k, bundle in enumerate(state.agents):
        path = directory / f"agent{k + 1}{suffix}.npz"
        manifest = checkpoint_manifest(state, k, partial=partial, run_hash=run_hash)
        paths.append(save_checkpoint(path, bundle.param_groups(), manifest))
    return paths


def load_bundle(path: Path) -> tuple[AgentBundle, Checkpoint]:
    """Agent bundle and raw checkpoint from ``path``."""
    ckpt = load_checkpoint(path)
    try:
        bundle = AgentBundle.from_groups(ckpt.groups, ckpt.manifest.get("optimizer_steps", {}))
    except KeyError as exc:
        raise CheckpointError(path, f"missing parameter group {exc}") from exc
    return bundle, ckpt


def load_actor(path: Path) -> tuple[Network, Params, dict[str, Any]]:
    """Actor architecture, parameters and manifest from a checkpoint."""
    ckpt = load_checkpoint(path)
    if "actor" not in ckpt.groups or "actor_net" not in ckpt.manifest:
        raise CheckpointError(path, "no actor stored")
    net = network_from_manifest(ckpt.manifest["actor_net"])
    return net, ckpt.groups["actor"], ckpt.manifest


def resume_state(config: TrainConfig, directory: Path) -> TrainState:
    """Rebuild a run's state from the ``agent<k>.npz`` files in ``directory``.

    Networks, targets and optimizer moments are restored and the iteration
    counter continues from the stored one. A replay buffer is not stored; it
    restarts holding the live actor.

    Raises:
        CheckpointError: If a file is missing or was written by a different
            environment or architecture.
    """
    state = init_train_state(config)
    iterations: set[int] = set()
    for k in range(len(state.agents)):
        path = directory / f"agent{k + 1}.npz"
        if not path.exists():
            raise CheckpointError(path, "missing learner checkpoint")
        bundle, ckpt = load_bundle(path)
        manifest = ckpt.manifest
        if manifest.get("env") != config.env or manifest.get("grid_size") != config.grid_size:
            raise CheckpointError(path, f"written for {manifest.get('env')}, not {config.env}")
        if manifest.get("actor_net") != state.actor_net.manifest():
            raise CheckpointError(path, "actor architecture differs from the config")
        if manifest.get("critic_net") != state.critic_net.manifest():
            raise CheckpointError(path, "critic architecture differs from the config")
        if config.decentralized_critic and bundle.opp_critic is None:
            raise CheckpointError(path, "no opponent critic for a decentralized run")
        state.agents[k] = bundle
        iterations.add(int(manifest["iteration"]))
    if len(iterations) != 1:
        raise CheckpointError(directory, f"learners stopped at different iterations {iterations}")
    state.iteration = iterations.pop()
    if state.replay is not None:
        state.replay.push(state.agents[0].actor)
    logger.info("trainer.resumed", directory=str(directory), iteration=state.iteration)
    return state
