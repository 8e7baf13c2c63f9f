"""Opponent shaping by Q-value approximation: differentiable returns and actor losses."""

from apps.loqa.dice import (
    DifferentiableOpponent,
    LoqaError,
    OpponentMethod,
    ReturnIndexError,
    differentiable_return,
    differentiable_returns,
)
from apps.loqa.losses import ActorLoss, batch_mean, loqa_actor_loss, naive_actor_loss
from apps.loqa.opponent import (
    implied_distribution,
    opponent_log_policy_approx,
    opponent_policy_approx,
)
from apps.loqa.oracle import EnumerableGame, EnumerationTooLargeError, reinforce_oracle

__all__ = [
    "ActorLoss",
    "DifferentiableOpponent",
    "EnumerableGame",
    "EnumerationTooLargeError",
    "LoqaError",
    "OpponentMethod",
    "ReturnIndexError",
    "batch_mean",
    "differentiable_return",
    "differentiable_returns",
    "implied_distribution",
    "loqa_actor_loss",
    "naive_actor_loss",
    "opponent_log_policy_approx",
    "opponent_policy_approx",
    "reinforce_oracle",
]
