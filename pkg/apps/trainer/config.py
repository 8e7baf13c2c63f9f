"""Hyperparameters the training loop consumes."""

from __future__ import annotations

from dataclasses import dataclass, field

from apps.envs import Environment
from apps.envs.coin import PENALTY_REWARD, PICKUP_REWARD, CoinGame
from apps.envs.ipd import IteratedPrisonersDilemma
from apps.loqa.dice import DifferentiableOpponent


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training run needs.

    Attributes:
        env:                  ``"ipd"`` or ``"coin"``.
        grid_size:            Coin Game side length.
        game_length:          Episode length ``T``.
        batch_size:           Episodes per iteration.
        iterations:           Training iterations.
        gamma:                Reward discount.
        opponent:             Differentiable-opponent method and parameters.
        actor_lr:             Actor Adam learning rate.
        critic_lr:            Critic Adam learning rate.
        target_ema:           Target-critic EMA decay.
        epsilon:              Epsilon-greedy exploration rate.
        entropy_beta:         Actor entropy bonus.
        clip_norm:            Actor global-norm clip; 0 disables.
        actor_hidden:         GRU actor hidden size (Coin Game).
        critic_hidden:        GRU critic hidden size.
        dense_layers:         Dense layers before each GRU.
        replay_buffer:        Train against snapshots from the agent replay buffer.
        replay_capacity:      Replay buffer capacity.
        replay_update_freq:   Push period in iterations.
        self_play:            One agent plays past or present copies of itself.
        decentralized_critic: Each agent learns its own model of the opponent's Q.
        shaping:              Include the opponent-shaping term in the actor loss.
        seed:                 Master seed.
    """

    env: str = "ipd"
    grid_size: int = 3
    game_length: int = 50
    batch_size: int = 2048
    iterations: int = 3000
    gamma: float = 0.96
    opponent: DifferentiableOpponent = field(default_factory=DifferentiableOpponent)
    actor_lr: float = 1e-3
    critic_lr: float = 1e-2
    target_ema: float = 0.99
    epsilon: float = 0.2
    entropy_beta: float = 0.0
    clip_norm: float = 0.0
    actor_hidden: int = 128
    critic_hidden: int = 64
    dense_layers: int = 2
    replay_buffer: bool = False
    replay_capacity: int = 10_000
    replay_update_freq: int = 10
    self_play: bool = False
    decentralized_critic: bool = False
    shaping: bool = True
    seed: int = 42
    pickup_reward: float = PICKUP_REWARD
    penalty_reward: float = PENALTY_REWARD

    def __post_init__(self) -> None:
        if self.env not in ("ipd", "coin"):
            raise ValueError(f"env must be 'ipd' or 'coin', got {self.env!r}")
        for name in ("actor_lr", "critic_lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("game_length", "batch_size", "replay_capacity", "replay_update_freq"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        for name in ("gamma", "target_ema", "epsilon"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.clip_norm < 0 or self.entropy_beta < 0:
            raise ValueError("clip_norm and entropy_beta must be >= 0")

    def make_env(self) -> Environment:
        if self.env == "ipd":
            return IteratedPrisonersDilemma(game_length=self.game_length)
        return CoinGame(
            grid_size=self.grid_size,
            game_length=self.game_length,
            pickup_reward=self.pickup_reward,
            penalty_reward=self.penalty_reward,
        )
