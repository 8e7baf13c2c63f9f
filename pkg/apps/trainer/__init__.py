"""Training: rollouts, critic and actor updates, self-play and the agent replay buffer."""

from apps.trainer.budget import BudgetExceededError, BudgetTracker
from apps.trainer.config import TrainConfig
from apps.trainer.loop import (
    METRIC_COLUMNS,
    AgentBundle,
    IterationMetrics,
    NonFiniteLossError,
    TrainResult,
    TrainState,
    init_train_state,
    self_play_pairing,
    train,
    train_iteration,
)
from apps.trainer.optim import AdamState, adam_step, clip_by_global_norm, global_norm
from apps.trainer.replay import EmptyReplayBufferError, ReplayBuffer
from apps.trainer.rollout import BehaviourPolicy, NetworkPolicy, rollout_batch, seeded_rollout

__all__ = [
    "METRIC_COLUMNS",
    "AdamState",
    "AgentBundle",
    "BehaviourPolicy",
    "BudgetExceededError",
    "BudgetTracker",
    "EmptyReplayBufferError",
    "IterationMetrics",
    "NetworkPolicy",
    "NonFiniteLossError",
    "ReplayBuffer",
    "TrainConfig",
    "TrainResult",
    "TrainState",
    "adam_step",
    "clip_by_global_norm",
    "global_norm",
    "init_train_state",
    "rollout_batch",
    "seeded_rollout",
    "self_play_pairing",
    "train",
    "train_iteration",
]
