"""
Actor losses.

Both losses are phrased for minimization::

    L = -mean_b sum_t A_t * (log pi(a_t | s_t) + log pi_hat(b_t | s_t)) - beta * mean_b sum_t H_t

``naive_actor_loss`` drops the ``log pi_hat`` shaping term and is the plain
advantage actor-critic loss. ``log pi`` is the log-probability under the
epsilon-greedy behaviour policy the actions were sampled from; the entropy
bonus uses the greedy policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.agents.networks import Network, ParamsLike
from apps.agents.policy import mixture_log_probs, policy_entropy, sequence_log_probs
from apps.envs.models import Seat
from apps.graphdiff import (
    Operand,
    add,
    multiply,
    negative,
    pick,
    reduce_mean,
    reduce_sum,
    subtract,
    value_of,
)
from apps.loqa.dice import DifferentiableOpponent, differentiable_returns
from apps.loqa.opponent import opponent_log_policy_approx


@dataclass(frozen=True)
class ActorLoss:
    """Scalar actor loss and its parts (all batch-averaged, time-summed).

    Attributes:
        total:   ``-(own + shaping) - beta * entropy``; the value to minimize.
        own:     Advantage-weighted own log-probabilities.
        shaping: Advantage-weighted opponent log-probability approximations;
                 zero for the naive loss.
        entropy: Policy entropy summed over time.
    """

    total: Operand
    own: Operand
    shaping: Operand
    entropy: Operand

    def values(self) -> dict[str, float]:
        return {
            "total": float(value_of(self.total)),
            "own": float(value_of(self.own)),
            "shaping": float(value_of(self.shaping)),
            "entropy": float(value_of(self.entropy)),
        }


def batch_mean(per_episode: Operand, weights: np.ndarray | None = None) -> Operand:
    """Plain batch mean, or a weighted sum when ``weights`` are given."""
    if weights is None:
        return reduce_mean(per_episode)
    return reduce_sum(multiply(per_episode, np.asarray(weights, dtype=np.float64)))


def _policy_terms(
    net: Network,
    params: ParamsLike,
    seat: Seat,
    epsilon: float,
) -> tuple[Operand, Operand]:
    greedy = sequence_log_probs(net, params, seat.obs)
    behaviour = mixture_log_probs(greedy, epsilon)
    return pick(behaviour, seat.actions), policy_entropy(greedy)


def _assemble(
    own_step: Operand,
    shaping_step: Operand | None,
    entropy_step: Operand,
    entropy_beta: float,
    weights: np.ndarray | None,
) -> ActorLoss:
    own = batch_mean(reduce_sum(own_step, axis=-1), weights)
    entropy = batch_mean(reduce_sum(entropy_step, axis=-1), weights)
    if shaping_step is None:
        shaping: Operand = np.zeros(())
        objective = own
    else:
        shaping = batch_mean(reduce_sum(shaping_step, axis=-1), weights)
        objective = add(own, shaping)
    total = subtract(negative(objective), multiply(entropy_beta, entropy))
    return ActorLoss(total=total, own=own, shaping=shaping, entropy=entropy)


def loqa_actor_loss(
    net: Network,
    params: ParamsLike,
    seat: Seat,
    advantages: np.ndarray,
    opp_critic_q: np.ndarray,
    opp_advantages: np.ndarray,
    gamma: float,
    opponent: DifferentiableOpponent,
    *,
    epsilon: float = 0.0,
    entropy_beta: float = 0.0,
    weights: np.ndarray | None = None,
    dice: bool = True,
    anchor: np.ndarray | None = None,
) -> ActorLoss:
    """Opponent-shaping actor loss for the agent sitting in ``seat``.

    Args:
        net, params:    The agent's actor and its (watched) parameters.
        seat:           Egocentric trajectory view of the agent.
        advantages:     The agent's own TD-0 advantages, (B, T).
        opp_critic_q:   Opponent action values ``Q(s_t, .)`` on the opponent's
                        observations, (B, T, A); constants.
        opp_advantages: Advantages of the opponent's reward stream, (B, T).
        gamma:          Reward discount.
        opponent:       How ``Q_hat`` is differentiated.
        epsilon:        Behaviour-policy exploration rate.
        entropy_beta:   Entropy bonus weight.
        weights:        Optional per-episode weights summing to one.
        dice:           Disable to drop the gradient path through ``Q_hat``.
        anchor:         Base-point log-probs for finite-difference surrogates.
    """
    adv = np.asarray(advantages, dtype=np.float64)
    log_pi, entropy_step = _policy_terms(net, params, seat, epsilon)
    q_hat = differentiable_returns(
        log_pi,
        seat.other_rewards,
        opp_advantages,
        gamma,
        opponent,
        dice=dice,
        anchor=anchor,
    )
    log_pi_hat = opponent_log_policy_approx(q_hat, opp_critic_q, seat.other_actions)
    return _assemble(
        multiply(adv, log_pi),
        multiply(adv, log_pi_hat),
        entropy_step,
        entropy_beta,
        weights,
    )


def naive_actor_loss(
    net: Network,
    params: ParamsLike,
    seat: Seat,
    advantages: np.ndarray,
    *,
    epsilon: float = 0.0,
    entropy_beta: float = 0.0,
    weights: np.ndarray | None = None,
) -> ActorLoss:
    """Advantage actor-critic loss without the shaping term."""
    adv = np.asarray(advantages, dtype=np.float64)
    log_pi, entropy_step = _policy_terms(net, params, seat, epsilon)
    return _assemble(multiply(adv, log_pi), None, entropy_step, entropy_beta, weights)
