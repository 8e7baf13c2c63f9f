"""Tests for the reverse-mode differentiation engine."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np
import pytest

from apps.graphdiff import (
    NonFiniteValueError,
    NonScalarLossError,
    Operand,
    ShapeMismatchError,
    StaleNodeError,
    Tape,
    analytic_gradient,
    concatenate,
    discount_matrix,
    discounted_cumsum,
    exp,
    finite_diff_check,
    huber,
    log,
    log_softmax,
    logsumexp,
    magic_box,
    matvec,
    multiply,
    pick,
    primitive_set,
    reduce_mean,
    reduce_sum,
    reshape,
    sigmoid,
    softmax,
    stack,
    stop_gradient,
    take,
    tanh,
    value_of,
)


def _params(rng: np.random.Generator) -> dict[str, np.ndarray]:
    return {"w": rng.normal(size=(3, 4)), "x": rng.normal(size=(2, 4))}


def test_primitive_registry_lists_core_ops() -> None:
    names = set(primitive_set())
    for op in ("add", "matvec", "log_softmax", "magic_box", "stop_gradient", "sum", "mean"):
        assert op in names


def test_plain_arrays_stay_plain() -> None:
    out = _double_sum(np.ones(3))
    assert isinstance(out, np.ndarray)
    assert float(out) == 6.0


def _double_sum(x: Operand) -> Operand:
    return reduce_sum(multiply(x, 2.0))


def test_matvec_tanh_chain_gradient(rng: np.random.Generator) -> None:
    def f(p: Mapping[str, Operand]) -> Operand:
        return reduce_sum(tanh(matvec(p["w"], p["x"])))

    assert finite_diff_check(f, _params(rng), eps=1e-5) <= 1e-6


def test_softmax_family_gradients(rng: np.random.Generator) -> None:
    weights = rng.normal(size=(2, 3))
    index = np.array([0, 2])

    def f(p: Mapping[str, Operand]) -> Operand:
        z = matvec(p["w"], p["x"])
        terms = [
            reduce_sum(multiply(softmax(z), weights)),
            reduce_sum(pick(log_softmax(z), index)),
            reduce_mean(logsumexp(z)),
        ]
        return reduce_sum(stack(terms))

    assert finite_diff_check(f, _params(rng), eps=1e-5) <= 1e-6


def test_layout_primitives_gradients(rng: np.random.Generator) -> None:
    def f(p: Mapping[str, Operand]) -> Operand:
        joined = concatenate([p["x"], multiply(p["x"], p["x"])], axis=-1)
        flat = reshape(joined, (16,))
        return _sigmoid_sum(take(reshape(flat, (2, 8)), 1, axis=0))

    assert finite_diff_check(f, _params(rng), eps=1e-5) <= 1e-6


def _sigmoid_sum(x: Operand) -> Operand:
    return reduce_sum(sigmoid(x))


def test_exp_log_huber_gradients(rng: np.random.Generator) -> None:
    params = {"v": rng.uniform(0.5, 2.0, size=5) * np.array([1, -1, 1, -1, 1])}

    def f(p: Mapping[str, Operand]) -> Operand:
        v = p["v"]
        return reduce_sum(
            stack([reduce_sum(huber(multiply(v, 3.0))), reduce_sum(log(exp(multiply(v, v))))])
        )

    assert finite_diff_check(f, params, eps=1e-5) <= 1e-6


def test_finite_diff_flags_wrong_tiny_gradient(rng: np.random.Generator) -> None:
    # True gradient is 1e-8 everywhere but the tape sees none of it.
    def f(p: Mapping[str, Operand]) -> Operand:
        return reduce_sum(multiply(stop_gradient(p["x"]), 1e-8))

    assert finite_diff_check(f, {"x": rng.normal(size=4)}) > 0.5


def test_finite_diff_ignores_exact_zero_gradient(rng: np.random.Generator) -> None:
    def f(p: Mapping[str, Operand]) -> Operand:
        return reduce_sum(tanh(p["x"]))

    assert finite_diff_check(f, {"x": rng.normal(size=3), "unused": np.ones(2)}) <= 1e-6


def test_discounted_cumsum_matches_loop(rng: np.random.Generator) -> None:
    x = rng.normal(size=(2, 5))
    out = value_of(discounted_cumsum(x, 0.9))
    expected = np.zeros_like(x)
    acc = np.zeros(2)
    for t in range(4, -1, -1):
        acc = x[:, t] + 0.9 * acc
        expected[:, t] = acc
    np.testing.assert_allclose(out, expected, rtol=1e-12)


def test_discount_matrix_is_upper_triangular() -> None:
    d = discount_matrix(3, 0.5)
    np.testing.assert_array_equal(d, [[1, 0.5, 0.25], [0, 1, 0.5], [0, 0, 1]])


def test_magic_box_is_one_and_differentiates_like_its_argument() -> None:
    tape = Tape()
    x = tape.watch("x", np.array([0.3, -1.2]))
    box = magic_box(x)
    assert np.array_equal(value_of(box), np.ones(2))
    grads = tape.backward(reduce_sum(box))
    np.testing.assert_array_equal(grads["x"], np.ones(2))


def test_magic_box_anchor_tracks_perturbations() -> None:
    out = magic_box(np.array([1.5]), anchor=np.array([1.0]))
    np.testing.assert_allclose(value_of(out), np.exp(0.5))


def test_stop_gradient_blocks_flow() -> None:
    tape = Tape()
    x = tape.watch("x", 2.0)
    loss = multiply(x, stop_gradient(x))
    assert float(tape.backward(loss)["x"]) == pytest.approx(2.0)


def test_unused_parameter_gets_zero_gradient() -> None:
    value, grads = analytic_gradient(
        lambda p: reduce_sum(p["a"]), {"a": np.ones(2), "b": np.ones(3)}
    )
    assert value == 2.0
    np.testing.assert_array_equal(grads["b"], np.zeros(3))


def test_operator_sugar_records_on_tape() -> None:
    tape = Tape()
    x = tape.watch("x", 3.0)
    y = 2.0 * x - x + x * x
    assert float(tape.backward(y)["x"]) == pytest.approx(1.0 + 2 * 3.0)


def test_backward_requires_scalar_loss() -> None:
    tape = Tape()
    x = tape.watch("x", np.ones(3))
    with pytest.raises(NonScalarLossError):
        tape.backward(multiply(x, 2.0))


def test_stale_node_rejected_after_reset() -> None:
    tape = Tape()
    x = tape.watch("x", 1.0)
    tape.reset()
    with pytest.raises(StaleNodeError):
        multiply(x, 2.0)


def test_shape_mismatch_names_primitive() -> None:
    with pytest.raises(ShapeMismatchError) as exc_info:
        matvec(np.ones((2, 3)), np.ones(4))
    assert exc_info.value.primitive == "matvec"


def test_non_finite_value_raises() -> None:
    with pytest.raises(NonFiniteValueError):
        log(np.array([0.0]))
