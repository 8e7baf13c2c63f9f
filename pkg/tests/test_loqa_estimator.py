"""Tests for differentiable opponent returns, checked against exact enumeration."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np
import pytest

from apps.graphdiff import (
    Operand,
    Tape,
    analytic_gradient,
    log_softmax,
    matvec,
    reduce_sum,
    reshape,
    take,
    value_of,
)
from apps.loqa import (
    DifferentiableOpponent,
    EnumerableGame,
    EnumerationTooLargeError,
    OpponentMethod,
    ReturnIndexError,
    differentiable_return,
    differentiable_returns,
    implied_distribution,
    opponent_log_policy_approx,
    opponent_policy_approx,
    reinforce_oracle,
)
from apps.loqa.dice import dependency_matrices
from apps.loqa.oracle import (
    Path,
    conditional_paths,
    enumerate_paths,
    exact_time_values,
    path_advantages,
    rewards_to_go,
    score,
)

FULL = DifferentiableOpponent(OpponentMethod.LOADED_DICE, lam=1.0)


def _small_game(horizon: int = 3, gamma: float = 0.9, offset: float = 0.0) -> EnumerableGame:
    """Two states, two actions, random dynamics and rewards."""
    rng = np.random.default_rng(5)
    return EnumerableGame(
        initial=np.array([0.6, 0.4]),
        transition=rng.dirichlet(np.ones(2), size=(2, 2, 2)),
        rewards1=rng.normal(size=(2, 2, 2)),
        rewards2=rng.normal(size=(2, 2, 2)) + offset,
        horizon=horizon,
        gamma=gamma,
    )


def _thetas() -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(11)
    return rng.normal(size=(2, 2)), rng.normal(size=(2, 2))


def _path_gradient(
    game: EnumerableGame, theta1: np.ndarray, path: Path, advantages: np.ndarray
) -> tuple[float, np.ndarray]:
    """Value and theta1-gradient of the differentiable opponent return at t=0."""
    n_s, n_a, horizon = game.n_states, game.n_actions, game.horizon
    select = np.zeros((horizon, n_s * n_a))
    for t, (s, a) in enumerate(zip(path.states, path.actions1, strict=True)):
        select[t, s * n_a + a] = 1.0
    rewards = path.rewards(game, 1)[None]

    def f(p: Mapping[str, Operand]) -> Operand:
        flat = reshape(log_softmax(p["theta1"]), (n_s * n_a,))
        log_probs = reshape(matvec(select, flat), (1, horizon))
        q_hat = differentiable_return(
            log_probs, rewards, advantages[None], game.gamma, FULL, t=0
        )
        return reduce_sum(q_hat)

    value, grads = analytic_gradient(f, {"theta1": theta1})
    return value, grads["theta1"]


def test_forward_value_is_the_plain_return(rng: np.random.Generator) -> None:
    log_probs = np.log(rng.uniform(0.1, 0.9, size=(3, 6)))
    rewards = rng.normal(size=(3, 6))
    advantages = rng.normal(size=(3, 6))
    plain = differentiable_returns(log_probs, rewards, advantages, 0.9, FULL, dice=False)
    tape = Tape()
    node = tape.watch("lp", log_probs)
    shaped = differentiable_returns(node, rewards, advantages, 0.9, FULL)
    assert np.array_equal(value_of(shaped), plain)


def _return_gradient(
    log_probs: np.ndarray,
    advantages: np.ndarray,
    opponent: DifferentiableOpponent,
    t: int,
) -> np.ndarray:
    rewards = np.zeros_like(advantages)

    def f(p: Mapping[str, Operand]) -> Operand:
        q_hat = differentiable_returns(p["lp"], rewards, advantages, 0.5, opponent)
        return reduce_sum(take(q_hat, t, axis=-1))

    return analytic_gradient(f, {"lp": log_probs})[1]["lp"]


def test_gradient_credits_own_actions_from_t_onwards(rng: np.random.Generator) -> None:
    log_probs = np.log(rng.uniform(0.1, 0.9, size=(2, 5)))
    advantages = rng.normal(size=(2, 5))
    grad = _return_gradient(log_probs, advantages, FULL, t=1)
    expected = np.zeros((2, 5))
    expected[:, 1:] = advantages[:, 1:] * 0.5 ** np.arange(4)
    np.testing.assert_allclose(grad, expected, rtol=1e-12, atol=1e-15)


def test_first_order_gradient_does_not_depend_on_lam(rng: np.random.Generator) -> None:
    log_probs = np.log(rng.uniform(0.1, 0.9, size=(2, 5)))
    advantages = rng.normal(size=(2, 5))
    low = DifferentiableOpponent(OpponentMethod.LOADED_DICE, lam=0.3)
    np.testing.assert_allclose(
        _return_gradient(log_probs, advantages, low, t=0),
        _return_gradient(log_probs, advantages, FULL, t=0),
        rtol=1e-12,
    )


def test_n_step_window_truncates_credit(rng: np.random.Generator) -> None:
    log_probs = np.log(rng.uniform(0.1, 0.9, size=(1, 6)))
    advantages = rng.normal(size=(1, 6))
    two_step = DifferentiableOpponent(OpponentMethod.N_STEP, lam=0.9, n_step=2)
    assert two_step.window == 2
    assert FULL.window is None
    grad = _return_gradient(log_probs, advantages, two_step, t=2)
    expected = np.zeros((1, 6))
    expected[0, 2] = advantages[0, 2]
    expected[0, 3] = 0.5 * advantages[0, 3]
    np.testing.assert_allclose(grad, expected, rtol=1e-12, atol=1e-15)


def test_dependency_matrices_shape_and_diagonal() -> None:
    inclusive, exclusive = dependency_matrices(3, 0.5)
    assert inclusive.shape == exclusive.shape == (9, 3)
    # row (t=0, k=2): lam**2, lam, 1 over j = 0, 1, 2
    np.testing.assert_allclose(inclusive[2], [0.25, 0.5, 1.0])
    np.testing.assert_allclose(exclusive[2], [0.25, 0.5, 0.0])
    np.testing.assert_array_equal(inclusive[3], [0.0, 0.0, 0.0])


@pytest.mark.parametrize("t", [-1, 4])
def test_return_index_outside_horizon(t: int) -> None:
    with pytest.raises(ReturnIndexError) as exc_info:
        differentiable_return(np.zeros((1, 4)), np.zeros((1, 4)), np.zeros((1, 4)), 0.9, FULL, t)
    assert exc_info.value.horizon == 4


def test_opponent_settings_validated() -> None:
    with pytest.raises(ValueError, match="lam"):
        DifferentiableOpponent(lam=1.5)
    with pytest.raises(ValueError, match="n_step"):
        DifferentiableOpponent(OpponentMethod.N_STEP, n_step=0)


def test_approximation_with_matching_value_is_critic_softmax() -> None:
    critic_q = np.array([[1.0, -0.5, 2.0]])
    actions = np.array([2])
    dist = implied_distribution(np.array([2.0]), critic_q, actions)
    softmax = np.exp(critic_q) / np.exp(critic_q).sum()
    np.testing.assert_allclose(dist, softmax, rtol=1e-12)
    np.testing.assert_allclose(
        value_of(opponent_policy_approx(np.array([2.0]), critic_q, actions)), softmax[:, 2]
    )


def test_approximation_is_stable_for_large_values() -> None:
    logp = value_of(
        opponent_log_policy_approx(np.array([1000.0]), np.array([[0.0, 999.0]]), np.array([0]))
    )
    assert np.isfinite(logp).all()
    assert float(logp[0]) == pytest.approx(-np.log1p(np.exp(-1.0)))


def test_approximation_gradient_is_one_minus_probability() -> None:
    critic_q = np.array([[0.3, -0.2]])
    actions = np.array([1])
    tape = Tape()
    q_hat = tape.watch("q", np.array([0.4]))
    grads = tape.backward(reduce_sum(opponent_log_policy_approx(q_hat, critic_q, actions)))
    p = float(value_of(opponent_policy_approx(np.array([0.4]), critic_q, actions))[0])
    assert float(grads["q"][0]) == pytest.approx(1.0 - p)


def test_enumeration_cap() -> None:
    game = EnumerableGame.matrix_game(np.zeros((2, 2)), np.zeros((2, 2)), horizon=7)
    assert game.trajectory_count == 2**14
    with pytest.raises(EnumerationTooLargeError) as exc_info:
        list(enumerate_paths(game))
    assert exc_info.value.count == 2**14


def test_conditional_paths_form_a_distribution() -> None:
    game = _small_game()
    theta1, theta2 = _thetas()
    total = sum(p for p, _ in conditional_paths(game, theta1, theta2, s0=0, b0=0))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_oracle_gradients_match_finite_differences() -> None:
    game = _small_game(horizon=2)
    theta1, theta2 = _thetas()
    exact = reinforce_oracle(game, theta1, theta2)
    eps = 1e-6
    for s in range(2):
        for a in range(2):
            bump = np.zeros((2, 2))
            bump[s, a] = eps
            up = reinforce_oracle(game, theta1 + bump, theta2)
            down = reinforce_oracle(game, theta1 - bump, theta2)
            d_q2 = (up.q2 - down.q2) / (2 * eps)
            assert d_q2 == pytest.approx(exact.grad_q2_theta1[s, a], rel=1e-5, abs=1e-9)
            up2 = reinforce_oracle(game, theta1, theta2 + bump)
            down2 = reinforce_oracle(game, theta1, theta2 - bump)
            d_v1 = (up2.value1 - down2.value1) / (2 * eps)
            assert d_v1 == pytest.approx(exact.grad_v1_theta2[s, a], rel=1e-5, abs=1e-9)


@pytest.mark.parametrize("baseline", ["td_advantages", "rewards_to_go"])
@pytest.mark.parametrize("horizon", [2, 3])
def test_expected_gradient_matches_enumeration_oracle(baseline: str, horizon: int) -> None:
    game = _small_game(horizon=horizon)
    theta1, theta2 = _thetas()
    oracle = reinforce_oracle(game, theta1, theta2, s0=0, b0=0)
    values = exact_time_values(game, theta1, theta2, agent=1)

    expected_value = 0.0
    expected_grad = np.zeros((2, 2))
    for p, path in conditional_paths(game, theta1, theta2, s0=0, b0=0):
        if baseline == "td_advantages":
            advantages = path_advantages(game, path, values, agent=1)
        else:
            advantages = rewards_to_go(game, path, agent=1)
        value, grad = _path_gradient(game, theta1, path, advantages)
        expected_value += p * value
        expected_grad += p * grad

    assert expected_value == pytest.approx(oracle.q2, rel=1e-10)
    np.testing.assert_allclose(expected_grad, oracle.grad_q2_theta1, rtol=1e-6, atol=1e-12)


def test_learned_baseline_lowers_variance_over_score_function() -> None:
    game = _small_game(offset=3.0)
    theta1, theta2 = _thetas()
    values = exact_time_values(game, theta1, theta2, agent=1)

    probs, dice, reinforce = [], [], []
    for p, path in conditional_paths(game, theta1, theta2, s0=0, b0=0):
        _, grad = _path_gradient(game, theta1, path, path_advantages(game, path, values, 1))
        probs.append(p)
        dice.append(grad.ravel())
        ret = path.discounted_return(game, 1)
        reinforce.append(ret * score(theta1, path.states, path.actions1).ravel())

    weights = np.array(probs)
    dice_arr, reinforce_arr = np.array(dice), np.array(reinforce)
    mean_dice = weights @ dice_arr
    mean_reinforce = weights @ reinforce_arr
    np.testing.assert_allclose(mean_dice, mean_reinforce, rtol=1e-6, atol=1e-12)

    def trace_variance(samples: np.ndarray, mean: np.ndarray) -> float:
        return float(weights @ ((samples - mean) ** 2).sum(axis=1))

    assert trace_variance(dice_arr, mean_dice) < trace_variance(reinforce_arr, mean_reinforce)
