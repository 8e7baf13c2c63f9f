"""Actors, critics and their persistence."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from apps.agents.checkpoint import (
    Checkpoint,
    CheckpointError,
    config_hash,
    load_checkpoint,
    save_checkpoint,
)
from apps.agents.critic import (
    ema_update,
    expected_values,
    huber_td_loss,
    q_values,
    state_value,
    taken_values,
    td0_advantage,
)
from apps.agents.networks import (
    DimensionMismatchError,
    GruNet,
    LogitActor,
    Network,
    Params,
    network_from_manifest,
    unroll,
)
from apps.agents.policy import (
    actor_log_probs,
    behaviour_probs,
    mixture_log_probs,
    policy_entropy,
    sample_action,
    sample_from_uniforms,
    sequence_log_probs,
)
from apps.envs import Environment
from apps.envs.models import IpdTag
from apps.graphdiff import sigmoid, value_of


def make_actor(env: Environment, hidden_size: int, dense_layers: int = 2) -> Network:
    """Tabular logits for the IPD, a GRU policy for the Coin Game."""
    if env.name == "ipd":
        return LogitActor(n_states=env.obs_dim)
    return GruNet(env.obs_dim, hidden_size, env.n_actions, dense_layers)


def make_critic(env: Environment, hidden_size: int, dense_layers: int = 2) -> Network:
    """GRU action-value network for either environment."""
    return GruNet(env.obs_dim, hidden_size, env.n_actions, dense_layers)


def cooperation_profile(actor_params: Mapping[str, np.ndarray]) -> dict[str, float]:
    """``P(cooperate | tag)`` for each IPD history tag of a logit actor."""
    probs = value_of(sigmoid(np.asarray(actor_params["logits"])))
    return {tag.name: float(probs[tag]) for tag in IpdTag}


__all__ = [
    "Checkpoint",
    "CheckpointError",
    "DimensionMismatchError",
    "GruNet",
    "LogitActor",
    "Network",
    "Params",
    "actor_log_probs",
    "behaviour_probs",
    "config_hash",
    "cooperation_profile",
    "ema_update",
    "expected_values",
    "huber_td_loss",
    "load_checkpoint",
    "make_actor",
    "make_critic",
    "mixture_log_probs",
    "network_from_manifest",
    "policy_entropy",
    "q_values",
    "sample_action",
    "sample_from_uniforms",
    "save_checkpoint",
    "sequence_log_probs",
    "state_value",
    "taken_values",
    "td0_advantage",
    "unroll",
]
