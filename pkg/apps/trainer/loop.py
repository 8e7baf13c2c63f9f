"""
The training loop.

One iteration:

1. Pick the opponent (self-play snapshot, replay sample, or the second
   learner) and roll out a batch with the epsilon-greedy behaviour policies.
2. Take one Adam step on each critic's Huber TD loss, then move the target
   critics by EMA.
3. Compute TD-0 advantages with the updated critics.
4. Take one clipped Adam step on each learning actor's loss: the
   opponent-shaping loss, or the naive actor-critic loss when shaping is off.

In self-play a single learner sits in seat 1 and its opponent never
updates. Its critic is fitted on both seats' experience, and that same
critic, evaluated on the opponent's observations, stands in for the
opponent's critic. Without self-play two learners train side by side and
each uses the other's critic. With ``decentralized_critic`` every learner
instead fits a private model of its opponent's Q from the opponent's
observed rewards and actions and treats the opponent as softmax over it.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import structlog

from apps.agents import make_actor, make_critic
from apps.agents.critic import (
    ema_update,
    huber_td_loss,
    q_values,
    state_value,
    taken_values,
    td0_advantage,
)
from apps.agents.networks import Network, Params, ParamsLike
from apps.envs import Environment, Trajectory
from apps.envs.models import Seat
from apps.envs.seeding import Purpose, stream
from apps.graphdiff import (
    DiffNode,
    NonFiniteValueError,
    Operand,
    Tape,
    reduce_mean,
    stack,
    value_of,
)
from apps.loqa.losses import ActorLoss, loqa_actor_loss, naive_actor_loss
from apps.trainer.budget import BudgetExceededError, BudgetTracker
from apps.trainer.config import TrainConfig
from apps.trainer.metrics import (
    ITERATION_DURATION_SECONDS,
    ITERATIONS_TOTAL,
    REPLAY_PUSHES_TOTAL,
)
from apps.trainer.optim import AdamState, adam_step, clip_by_global_norm
from apps.trainer.replay import ReplayBuffer
from apps.trainer.rollout import NetworkPolicy, seeded_rollout

logger = structlog.get_logger()

METRIC_COLUMNS = (
    "iteration",
    "wall_clock_s",
    "ret_agent1",
    "ret_agent2",
    "q_loss1",
    "q_loss2",
    "actor_loss1",
    "actor_loss2",
    "entropy1",
    "entropy2",
    "grad_norm1",
    "grad_norm2",
)


class NonFiniteLossError(Exception):
    """Raised when a loss term evaluates to NaN or infinity."""

    def __init__(self, term: str, iteration: int) -> None:
        self.term = term
        self.iteration = iteration
        super().__init__(f"Non-finite value in {term} at iteration {iteration}")


def _copy(params: Params) -> Params:
    return {k: np.array(v, copy=True) for k, v in params.items()}


@dataclass
class AgentBundle:
    """One learner's parameters and optimizer state.

    Attributes:
        actor, critic, target:   Actor, online critic and target critic.
        actor_opt, critic_opt:   Adam state for actor and critic.
        opp_critic, opp_target:  Private model of the opponent's Q
                                 (decentralized critics only).
        opp_opt:                 Adam state of that model.
    """

    actor: Params
    critic: Params
    target: Params
    actor_opt: AdamState
    critic_opt: AdamState
    opp_critic: Params | None = None
    opp_target: Params | None = None
    opp_opt: AdamState | None = None

    @classmethod
    def initialize(
        cls,
        actor_net: Network,
        critic_net: Network,
        rng: np.random.Generator,
        decentralized: bool = False,
    ) -> AgentBundle:
        actor = actor_net.init_params(rng)
        critic = critic_net.init_params(rng)
        bundle = cls(
            actor=actor,
            critic=critic,
            target=_copy(critic),
            actor_opt=AdamState.zeros_like(actor),
            critic_opt=AdamState.zeros_like(critic),
        )
        if decentralized:
            opp = critic_net.init_params(rng)
            bundle.opp_critic = opp
            bundle.opp_target = _copy(opp)
            bundle.opp_opt = AdamState.zeros_like(opp)
        return bundle

    def snapshot(self) -> Params:
        return _copy(self.actor)

    def param_groups(self) -> dict[str, Params]:
        """Named parameter groups for checkpointing."""
        groups = {
            "actor": self.actor,
            "critic": self.critic,
            "target": self.target,
            "actor_adam_m": self.actor_opt.m,
            "actor_adam_v": self.actor_opt.v,
            "critic_adam_m": self.critic_opt.m,
            "critic_adam_v": self.critic_opt.v,
        }
        if self.opp_critic is not None and self.opp_target is not None:
            groups["opp_critic"] = self.opp_critic
            groups["opp_target"] = self.opp_target
        return groups

    def optimizer_steps(self) -> dict[str, int]:
        return {"actor": self.actor_opt.step, "critic": self.critic_opt.step}

    @classmethod
    def from_groups(cls, groups: dict[str, Params], steps: dict[str, int]) -> AgentBundle:
        """Rebuild a bundle from ``param_groups()`` output (decentralized
        optimizer state is restarted)."""
        bundle = cls(
            actor=groups["actor"],
            critic=groups["critic"],
            target=groups["target"],
            actor_opt=AdamState(
                groups["actor_adam_m"], groups["actor_adam_v"], int(steps.get("actor", 0))
            ),
            critic_opt=AdamState(
                groups["critic_adam_m"], groups["critic_adam_v"], int(steps.get("critic", 0))
            ),
        )
        if "opp_critic" in groups:
            bundle.opp_critic = groups["opp_critic"]
            bundle.opp_target = groups.get("opp_target", _copy(groups["opp_critic"]))
            bundle.opp_opt = AdamState.zeros_like(groups["opp_critic"])
        return bundle


@dataclass
class TrainState:
    """Mutable state of a run.

    ``agents`` holds one bundle under self-play and two otherwise.
    """

    config: TrainConfig
    env: Environment
    actor_net: Network
    critic_net: Network
    agents: list[AgentBundle]
    replay: ReplayBuffer | None = None
    iteration: int = 0


@dataclass(frozen=True)
class IterationMetrics:
    """Per-iteration summary; ``None`` marks a value that does not apply.

    Returns are average per-step rewards over the batch.
    """

    iteration: int
    ret_agent1: float
    ret_agent2: float
    q_loss1: float
    q_loss2: float
    actor_loss1: float
    actor_loss2: float | None
    entropy1: float
    entropy2: float | None
    grad_norm1: float
    grad_norm2: float | None

    def row(self, wall_clock_s: float | None = None) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "wall_clock_s": wall_clock_s,
            "ret_agent1": self.ret_agent1,
            "ret_agent2": self.ret_agent2,
            "q_loss1": self.q_loss1,
            "q_loss2": self.q_loss2,
            "actor_loss1": self.actor_loss1,
            "actor_loss2": self.actor_loss2,
            "entropy1": self.entropy1,
            "entropy2": self.entropy2,
            "grad_norm1": self.grad_norm1,
            "grad_norm2": self.grad_norm2,
        }


@dataclass(frozen=True)
class ActorStep:
    loss: ActorLoss
    grad_norm: float


@dataclass
class TrainResult:
    state: TrainState
    history: list[IterationMetrics] = field(default_factory=list)
    partial: bool = False

    @property
    def iterations_run(self) -> int:
        return len(self.history)


def init_train_state(config: TrainConfig) -> TrainState:
    """Build networks and initialize every learner from the master seed."""
    env = config.make_env()
    actor_net = make_actor(env, config.actor_hidden, config.dense_layers)
    critic_net = make_critic(env, config.critic_hidden, config.dense_layers)
    n_agents = 1 if config.self_play else 2
    agents = [
        AgentBundle.initialize(
            actor_net,
            critic_net,
            stream(config.seed, Purpose.INIT, k),
            decentralized=config.decentralized_critic,
        )
        for k in range(n_agents)
    ]
    replay = None
    if config.self_play and config.replay_buffer:
        replay = ReplayBuffer(config.replay_capacity, config.replay_update_freq)
    return TrainState(config, env, actor_net, critic_net, agents, replay)


def self_play_pairing(state: TrainState) -> tuple[Params, Params]:
    """Actor parameters for seat 1 and seat 2 this iteration.

    Under self-play with a replay buffer the current snapshot is pushed when
    the iteration is on the push schedule, then the opponent is sampled
    uniformly from the buffer. Without a buffer the opponent is a copy of
    the live agent. Without self-play the two learners face each other.
    """
    live = state.agents[0]
    if not state.config.self_play:
        return live.actor, state.agents[1].actor
    if state.replay is None:
        return live.actor, live.snapshot()
    if state.replay.maybe_push(state.iteration, live.actor):
        REPLAY_PUSHES_TOTAL.inc()
    rng = stream(state.config.seed, Purpose.REPLAY, state.iteration)
    return live.actor, state.replay.sample(rng)


def rollout(state: TrainState, actor1: Params, actor2: Params) -> Trajectory:
    cfg = state.config
    return seeded_rollout(
        state.env,
        NetworkPolicy(state.actor_net, actor1),
        NetworkPolicy(state.actor_net, actor2),
        cfg.epsilon,
        cfg.batch_size,
        cfg.seed,
        state.iteration,
    )


# ── Critic phase ──────────────────────────────────────────────────────────────


CriticData = tuple[np.ndarray, np.ndarray, np.ndarray]


def _seat_critic_loss(
    net: Network, params: ParamsLike, target: Params, data: CriticData, gamma: float
) -> Operand:
    obs, actions, rewards = data
    q = q_values(net, params, obs)
    target_taken = np.asarray(value_of(taken_values(q_values(net, target, obs), actions)))
    return huber_td_loss(taken_values(q, actions), target_taken, rewards, gamma)


def critic_step(
    net: Network,
    params: Params,
    target: Params,
    opt: AdamState,
    seats: list[CriticData],
    config: TrainConfig,
    term: str,
    iteration: int,
) -> tuple[Params, Params, AdamState, list[float]]:
    """One Adam step on the Huber TD loss averaged over ``seats``, then EMA.

    Each entry of ``seats`` is ``(obs, actions, rewards)`` of one seat.

    Returns:
        (critic, target, optimizer state, per-seat loss values)
    """
    tape = Tape()
    nodes = tape.watch_all(params)
    try:
        per_seat = [_seat_critic_loss(net, nodes, target, d, config.gamma) for d in seats]
        loss = per_seat[0] if len(per_seat) == 1 else reduce_mean(stack(per_seat))
    except NonFiniteValueError as exc:
        raise NonFiniteLossError(term, iteration) from exc
    if not isinstance(loss, DiffNode):
        raise NonFiniteLossError(term, iteration)
    grads = tape.backward(loss)
    new_params, new_opt = adam_step(params, grads, opt, config.critic_lr)
    new_target = ema_update(target, new_params, config.target_ema)
    return new_params, new_target, new_opt, [float(value_of(v)) for v in per_seat]


def _eager_q(net: Network, params: Params, obs: np.ndarray) -> np.ndarray:
    return np.asarray(value_of(q_values(net, params, obs)))


def _softmax(q: np.ndarray) -> np.ndarray:
    e = np.exp(q - q.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def advantages_from_q(
    q: np.ndarray, probs: np.ndarray, rewards: np.ndarray, gamma: float
) -> np.ndarray:
    """TD-0 advantages with ``V(s) = sum_a pi(a | s) Q(s, a)``."""
    values = np.asarray(value_of(state_value(q, probs)))
    return td0_advantage(rewards, values, gamma)


# ── Actor phase ───────────────────────────────────────────────────────────────


def actor_step(
    state: TrainState,
    bundle: AgentBundle,
    seat: Seat,
    advantages: np.ndarray,
    opp_q: np.ndarray,
    opp_advantages: np.ndarray,
    term: str,
) -> ActorStep:
    """Build the actor loss on a fresh tape and apply one clipped Adam step."""
    cfg = state.config
    tape = Tape()
    nodes = tape.watch_all(bundle.actor)
    try:
        if cfg.shaping:
            loss = loqa_actor_loss(
                state.actor_net,
                nodes,
                seat,
                advantages,
                opp_q,
                opp_advantages,
                cfg.gamma,
                cfg.opponent,
                epsilon=cfg.epsilon,
                entropy_beta=cfg.entropy_beta,
            )
        else:
            loss = naive_actor_loss(
                state.actor_net,
                nodes,
                seat,
                advantages,
                epsilon=cfg.epsilon,
                entropy_beta=cfg.entropy_beta,
            )
    except NonFiniteValueError as exc:
        raise NonFiniteLossError(term, state.iteration) from exc
    if not isinstance(loss.total, DiffNode):
        raise NonFiniteLossError(term, state.iteration)

    grads = tape.backward(loss.total)
    clipped, norm = clip_by_global_norm(grads, cfg.clip_norm)
    bundle.actor, bundle.actor_opt = adam_step(
        bundle.actor, clipped, bundle.actor_opt, cfg.actor_lr
    )
    return ActorStep(loss=loss, grad_norm=norm)


def _opponent_model(
    state: TrainState,
    bundle: AgentBundle,
    seat: Seat,
    shared_q: np.ndarray,
    shared_adv: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Opponent action values and advantages as seen by ``bundle``.

    With a private opponent model the opponent is assumed to play
    softmax over the modelled Q.
    """
    if bundle.opp_critic is None:
        return shared_q, shared_adv
    q = _eager_q(state.critic_net, bundle.opp_critic, seat.other_obs)
    adv = advantages_from_q(q, _softmax(q), seat.other_rewards, state.config.gamma)
    return q, adv


def _fit_opponent_models(state: TrainState, seats: list[Seat]) -> None:
    cfg = state.config
    for k, (bundle, seat) in enumerate(zip(state.agents, seats, strict=False)):
        if bundle.opp_critic is None or bundle.opp_target is None or bundle.opp_opt is None:
            continue
        data = [(seat.other_obs, seat.other_actions, seat.other_rewards)]
        bundle.opp_critic, bundle.opp_target, bundle.opp_opt, _ = critic_step(
            state.critic_net,
            bundle.opp_critic,
            bundle.opp_target,
            bundle.opp_opt,
            data,
            cfg,
            f"opponent_q_loss{k + 1}",
            state.iteration,
        )


def train_iteration(state: TrainState) -> IterationMetrics:
    """Run one iteration in place and return its metrics."""
    cfg = state.config
    actor1, actor2 = self_play_pairing(state)
    traj = rollout(state, actor1, actor2)
    seats = [traj.seat(0), traj.seat(1)]

    # Critics. Under self-play the one critic learns from both seats.
    data = [(s.obs, s.actions, s.rewards) for s in seats]
    groups = [data] if cfg.self_play else [[d] for d in data]
    q_losses: list[float] = []
    for k, (bundle, group) in enumerate(zip(state.agents, groups, strict=True)):
        bundle.critic, bundle.target, bundle.critic_opt, losses = critic_step(
            state.critic_net,
            bundle.critic,
            bundle.target,
            bundle.critic_opt,
            group,
            cfg,
            f"q_loss{k + 1}",
            state.iteration,
        )
        q_losses.extend(losses)
    critics = [state.agents[0].critic, state.agents[-1].critic]
    _fit_opponent_models(state, seats)

    # Advantages under the updated critics.
    q = [_eager_q(state.critic_net, critics[k], seats[k].obs) for k in range(2)]
    adv = [
        advantages_from_q(q[k], seats[k].probs, seats[k].rewards, cfg.gamma) for k in range(2)
    ]

    # Actors.
    steps: list[ActorStep] = []
    for k, bundle in enumerate(state.agents):
        opp_q, opp_adv = _opponent_model(state, bundle, seats[k], q[1 - k], adv[1 - k])
        steps.append(
            actor_step(state, bundle, seats[k], adv[k], opp_q, opp_adv, f"actor_loss{k + 1}")
        )

    horizon = traj.horizon
    second = steps[1] if len(steps) > 1 else None
    metrics = IterationMetrics(
        iteration=state.iteration,
        ret_agent1=float(traj.rewards1.sum(axis=1).mean() / horizon),
        ret_agent2=float(traj.rewards2.sum(axis=1).mean() / horizon),
        q_loss1=q_losses[0],
        q_loss2=q_losses[1],
        actor_loss1=steps[0].loss.values()["total"],
        actor_loss2=second.loss.values()["total"] if second else None,
        entropy1=steps[0].loss.values()["entropy"],
        entropy2=second.loss.values()["entropy"] if second else None,
        grad_norm1=steps[0].grad_norm,
        grad_norm2=second.grad_norm if second else None,
    )
    state.iteration += 1
    ITERATIONS_TOTAL.labels(env=cfg.env).inc()
    return metrics


IterationHook = Callable[[TrainState, IterationMetrics], None]


def train(
    config: TrainConfig,
    *,
    budget: BudgetTracker | None = None,
    on_iteration: IterationHook | None = None,
    log_every: int = 10,
    state: TrainState | None = None,
) -> TrainResult:
    """Run up to ``config.iterations`` iterations or until the budget runs out.

    ``on_iteration`` is called after every iteration (metrics writers,
    checkpointing, periodic evaluation). A resumed ``state`` continues from
    its own iteration counter; only the remaining iterations are run.
    """
    if state is None:
        state = init_train_state(config)
    result = TrainResult(state=state)
    budget = budget or BudgetTracker()
    logger.info(
        "trainer.start",
        env=config.env,
        iterations=config.iterations,
        start=state.iteration,
        batch_size=config.batch_size,
        self_play=config.self_play,
        replay_buffer=config.replay_buffer,
        shaping=config.shaping,
    )
    for _ in range(max(config.iterations - state.iteration, 0)):
        try:
            budget.check()
        except BudgetExceededError:
            result.partial = True
            break
        started = time.perf_counter()
        metrics = train_iteration(state)
        ITERATION_DURATION_SECONDS.labels(env=config.env).observe(time.perf_counter() - started)
        result.history.append(metrics)
        if on_iteration is not None:
            on_iteration(state, metrics)
        if metrics.iteration % log_every == 0:
            logger.info(
                "trainer.iteration",
                iteration=metrics.iteration,
                ret_agent1=metrics.ret_agent1,
                ret_agent2=metrics.ret_agent2,
                q_loss1=metrics.q_loss1,
                actor_loss1=metrics.actor_loss1,
            )
    logger.info(
        "trainer.finished",
        iterations_run=result.iterations_run,
        partial=result.partial,
    )
    return result
