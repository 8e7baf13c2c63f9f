"""
Exact-enumeration oracle for small two-player games.

Used by the test-suite to check the differentiable-return estimator and the
actor losses against exact expectations. Policies are tabular softmax over
per-state logits ``theta[s, a]``; every trajectory of the game is
enumerated and weighted by its probability.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from apps.loqa.dice import LoqaError

MAX_TRAJECTORIES = 10_000


class EnumerationTooLargeError(LoqaError):
    """Raised when a game has more trajectories than the enumeration cap."""

    def __init__(self, count: int, cap: int) -> None:
        self.count = count
        self.cap = cap
        super().__init__(f"Game has {count} trajectories, cap is {cap}")


@dataclass(frozen=True)
class EnumerableGame:
    """Finite-horizon two-player stochastic game.

    Attributes:
        initial:    Start-state distribution, shape (S,).
        transition: ``P[s, a, b, s']``, shape (S, A, A, S).
        rewards1:   Agent 1 reward ``r1[s, a, b]``.
        rewards2:   Agent 2 reward ``r2[s, a, b]``.
        horizon:    Number of steps ``T``.
        gamma:      Reward discount.
    """

    initial: np.ndarray
    transition: np.ndarray
    rewards1: np.ndarray
    rewards2: np.ndarray
    horizon: int
    gamma: float = 1.0

    def __post_init__(self) -> None:
        s, a = self.n_states, self.n_actions
        if self.transition.shape != (s, a, a, s):
            raise ValueError(f"transition shape {self.transition.shape} != {(s, a, a, s)}")
        for name in ("rewards1", "rewards2"):
            if getattr(self, name).shape != (s, a, a):
                raise ValueError(f"{name} must have shape {(s, a, a)}")
        if not np.allclose(self.transition.sum(axis=-1), 1.0):
            raise ValueError("transition rows must sum to 1")
        if not np.isclose(self.initial.sum(), 1.0):
            raise ValueError("initial distribution must sum to 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def n_states(self) -> int:
        return int(self.initial.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.rewards1.shape[1])

    @property
    def trajectory_count(self) -> int:
        return self.n_states**self.horizon * self.n_actions ** (2 * self.horizon)

    @classmethod
    def matrix_game(
        cls, payoff1: np.ndarray, payoff2: np.ndarray, horizon: int = 1, gamma: float = 1.0
    ) -> EnumerableGame:
        """Repeated single-state game with payoffs ``payoff[a, b]``."""
        n = payoff1.shape[0]
        return cls(
            initial=np.ones(1),
            transition=np.ones((1, n, n, 1)),
            rewards1=np.asarray(payoff1, dtype=np.float64)[None],
            rewards2=np.asarray(payoff2, dtype=np.float64)[None],
            horizon=horizon,
            gamma=gamma,
        )

    def reward(self, agent: int) -> np.ndarray:
        return self.rewards1 if agent == 0 else self.rewards2


@dataclass(frozen=True)
class Path:
    """One trajectory: states ``s_0..s_{T-1}`` and both action sequences."""

    states: tuple[int, ...]
    actions1: tuple[int, ...]
    actions2: tuple[int, ...]

    def rewards(self, game: EnumerableGame, agent: int) -> np.ndarray:
        r = game.reward(agent)
        steps = zip(self.states, self.actions1, self.actions2, strict=True)
        return np.array([r[s, a, b] for s, a, b in steps])

    def discounted_return(self, game: EnumerableGame, agent: int) -> float:
        disc = game.gamma ** np.arange(game.horizon)
        return float(disc @ self.rewards(game, agent))


@dataclass(frozen=True)
class OracleGradients:
    """Exact quantities for one policy pair.

    Attributes:
        value1:         ``V^1`` from the start distribution.
        grad_v1_theta2: ``d V^1 / d theta^2``, shape (S, A).
        q2:             ``Q^2(s0, b0)``.
        grad_q2_theta1: ``d Q^2(s0, b0) / d theta^1``, shape (S, A).
    """

    value1: float
    grad_v1_theta2: np.ndarray
    q2: float
    grad_q2_theta1: np.ndarray


def tabular_policy(theta: np.ndarray) -> np.ndarray:
    """Row-wise softmax of per-state logits."""
    shifted = theta - theta.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def score(theta: np.ndarray, states: tuple[int, ...], actions: tuple[int, ...]) -> np.ndarray:
    """``sum_j grad_theta log pi(a_j | s_j)`` for a tabular softmax policy."""
    pi = tabular_policy(theta)
    grad = np.zeros_like(theta)
    for s, a in zip(states, actions, strict=True):
        grad[s] -= pi[s]
        grad[s, a] += 1.0
    return grad


def enumerate_paths(game: EnumerableGame, cap: int = MAX_TRAJECTORIES) -> Iterator[Path]:
    """Every state/action sequence of the game, including zero-probability ones."""
    if game.trajectory_count > cap:
        raise EnumerationTooLargeError(game.trajectory_count, cap)
    states = range(game.n_states)
    actions = range(game.n_actions)
    t = game.horizon
    for seq in itertools.product(states, repeat=t):
        for acts1 in itertools.product(actions, repeat=t):
            for acts2 in itertools.product(actions, repeat=t):
                yield Path(seq, acts1, acts2)


def environment_probability(game: EnumerableGame, path: Path) -> float:
    """Start-state and transition probability of a path."""
    p = float(game.initial[path.states[0]])
    for j in range(game.horizon - 1):
        s, a, b = path.states[j], path.actions1[j], path.actions2[j]
        p *= float(game.transition[s, a, b, path.states[j + 1]])
    return p


def policy_probability(
    theta: np.ndarray, states: tuple[int, ...], actions: tuple[int, ...]
) -> float:
    pi = tabular_policy(theta)
    return float(np.prod([pi[s, a] for s, a in zip(states, actions, strict=True)]))


def path_probability(
    game: EnumerableGame, theta1: np.ndarray, theta2: np.ndarray, path: Path
) -> float:
    return (
        environment_probability(game, path)
        * policy_probability(theta1, path.states, path.actions1)
        * policy_probability(theta2, path.states, path.actions2)
    )


def conditional_paths(
    game: EnumerableGame, theta1: np.ndarray, theta2: np.ndarray, s0: int, b0: int
) -> list[tuple[float, Path]]:
    """Paths starting in ``s0`` with opponent first action ``b0``, with their
    probabilities conditioned on that start."""
    pi2 = tabular_policy(theta2)
    norm = float(game.initial[s0]) * float(pi2[s0, b0])
    if norm == 0.0:
        raise ValueError(f"start ({s0}, {b0}) has zero probability")
    out = []
    for path in enumerate_paths(game):
        if path.states[0] != s0 or path.actions2[0] != b0:
            continue
        p = path_probability(game, theta1, theta2, path) / norm
        if p > 0.0:
            out.append((p, path))
    return out


def exact_time_values(
    game: EnumerableGame, theta1: np.ndarray, theta2: np.ndarray, agent: int
) -> np.ndarray:
    """``V_t(s)`` by backward induction, shape (T + 1, S) with ``V_T = 0``."""
    pi1, pi2 = tabular_policy(theta1), tabular_policy(theta2)
    r = game.reward(agent)
    values = np.zeros((game.horizon + 1, game.n_states))
    for t in range(game.horizon - 1, -1, -1):
        q = r + game.gamma * game.transition @ values[t + 1]
        values[t] = np.einsum("sa,sb,sab->s", pi1, pi2, q)
    return values


def path_advantages(
    game: EnumerableGame, path: Path, values: np.ndarray, agent: int
) -> np.ndarray:
    """TD-0 advantages ``r_k + gamma * V_{k+1}(s_{k+1}) - V_k(s_k)`` along a path."""
    rewards = path.rewards(game, agent)
    adv = np.empty(game.horizon)
    for k in range(game.horizon):
        s = path.states[k]
        nxt = values[k + 1, path.states[k + 1]] if k + 1 < game.horizon else 0.0
        adv[k] = rewards[k] + game.gamma * nxt - values[k, s]
    return adv


def rewards_to_go(game: EnumerableGame, path: Path, agent: int) -> np.ndarray:
    """``sum_{m >= k} gamma**(m - k) * r_m`` for each ``k``."""
    rewards = path.rewards(game, agent)
    out = np.zeros(game.horizon)
    acc = 0.0
    for k in range(game.horizon - 1, -1, -1):
        acc = rewards[k] + game.gamma * acc
        out[k] = acc
    return out


def reinforce_oracle(
    game: EnumerableGame,
    theta1: np.ndarray,
    theta2: np.ndarray,
    s0: int = 0,
    b0: int = 0,
) -> OracleGradients:
    """Exact ``d V^1 / d theta^2`` and ``d Q^2(s0, b0) / d theta^1``.

    Both are expectations of score-function terms summed over every path.
    The opponent's first action is conditioned on in ``Q^2``, so only the
    shaper's score contributes there.
    """
    value1 = 0.0
    grad_v1 = np.zeros_like(theta2, dtype=np.float64)
    for path in enumerate_paths(game):
        p = path_probability(game, theta1, theta2, path)
        if p == 0.0:
            continue
        ret = path.discounted_return(game, 0)
        value1 += p * ret
        grad_v1 += p * ret * score(theta2, path.states, path.actions2)

    q2 = 0.0
    grad_q2 = np.zeros_like(theta1, dtype=np.float64)
    for p, path in conditional_paths(game, theta1, theta2, s0, b0):
        ret = path.discounted_return(game, 1)
        q2 += p * ret
        grad_q2 += p * ret * score(theta1, path.states, path.actions1)

    return OracleGradients(value1=value1, grad_v1_theta2=grad_v1, q2=q2, grad_q2_theta1=grad_q2)
