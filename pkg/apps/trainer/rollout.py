"""
Batched episode generation.

Any object following ``BehaviourPolicy`` can sit in either seat: network
actors during training, fixed strategies in the league. Randomness comes
exclusively from a pre-drawn uniform block (see ``apps.envs.seeding``), so a
rollout is a pure function of the policies and the block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol, runtime_checkable

import numpy as np

from apps.agents.networks import Network, Params
from apps.agents.policy import actor_log_probs, behaviour_probs, sample_from_uniforms
from apps.envs import Environment, Trajectory
from apps.envs.seeding import Purpose, episode_uniforms

_STEP_FIELDS = (
    "obs1", "obs2", "actions1", "actions2", "rewards1", "rewards2", "probs1", "probs2",
)


@runtime_checkable
class BehaviourPolicy(Protocol):
    """Greedy action distribution for a batch of episodes."""

    def begin(self, batch_size: int) -> Any:
        """Per-episode memory at the start of a batch."""
        ...

    def probs(self, obs: np.ndarray, memory: Any) -> tuple[np.ndarray, Any]:
        """Action probabilities (B, A) and the updated memory."""
        ...


@dataclass(frozen=True)
class NetworkPolicy:
    """A network actor with a fixed parameter snapshot."""

    net: Network
    params: Params

    def begin(self, batch_size: int) -> np.ndarray:
        return self.net.initial_hidden(batch_size)

    def probs(self, obs: np.ndarray, memory: Any) -> tuple[np.ndarray, Any]:
        logp, hidden = actor_log_probs(self.net, self.params, obs, memory)
        return np.exp(np.asarray(logp)), hidden


def rollout_batch(
    env: Environment,
    policy1: BehaviourPolicy,
    policy2: BehaviourPolicy,
    epsilon: float,
    uniforms: np.ndarray,
) -> Trajectory:
    """Play ``len(uniforms)`` episodes of ``env.game_length`` steps.

    ``uniforms`` has shape (B, T + 1, 4): slot 0 of step ``t`` samples agent
    1's action, slot 1 agent 2's, slots 2.. feed the environment; row ``T``
    drives the reset.
    """
    batch = uniforms.shape[0]
    horizon = env.game_length
    if uniforms.shape[1] != horizon + 1:
        raise ValueError(f"uniform block covers {uniforms.shape[1] - 1} steps, need {horizon}")

    state = env.reset(uniforms[:, horizon])
    mem1 = policy1.begin(batch)
    mem2 = policy2.begin(batch)
    steps: dict[str, list[np.ndarray]] = {name: [] for name in _STEP_FIELDS}

    for t in range(horizon):
        o1 = env.encode(state, 0)
        o2 = env.encode(state, 1)
        greedy1, mem1 = policy1.probs(o1, mem1)
        greedy2, mem2 = policy2.probs(o2, mem2)
        p1 = behaviour_probs(greedy1, epsilon)
        p2 = behaviour_probs(greedy2, epsilon)
        a = sample_from_uniforms(p1, uniforms[:, t, 0])
        b = sample_from_uniforms(p2, uniforms[:, t, 1])
        state, r1, r2 = env.step(state, a, b, uniforms[:, t, 2:])
        for name, value in zip(_STEP_FIELDS, (o1, o2, a, b, r1, r2, p1, p2), strict=True):
            steps[name].append(value)

    terminal = np.zeros((batch, horizon), dtype=bool)
    terminal[:, -1] = True
    return Trajectory(
        **{name: np.stack(values, axis=1) for name, values in steps.items()},
        terminal=terminal,
    )


def seeded_rollout(
    env: Environment,
    policy1: BehaviourPolicy,
    policy2: BehaviourPolicy,
    epsilon: float,
    batch_size: int,
    master_seed: int,
    counter: int,
    purpose: Purpose = Purpose.ROLLOUT,
) -> Trajectory:
    """``rollout_batch`` on the uniform block of ``(master_seed, purpose, counter)``."""
    block = episode_uniforms(master_seed, counter, batch_size, env.game_length, purpose)
    return rollout_batch(env, policy1, policy2, epsilon, block)
