"""Tests for the elementwise/affine kernel ops.

Derived expectations come from oracles written independently of the
implementation: triple-loop matmul, naive unstabilized softmax, and central
finite differences.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nser.errors import DimensionError
from nser.nn import (
    LinearParams,
    dropout_mask,
    grad_check,
    layer_norm,
    layer_norm_backward,
    linear_backward,
    linear_forward,
    maxpool_time,
    maxpool_time_backward,
    relu,
    relu_backward,
    softmax,
    softmax_cross_entropy,
)


def naive_matmul(x, w_t):
    """Triple-loop matmul oracle, no numpy dot products."""
    m, inner = len(x), len(x[0])
    out_dim = len(w_t[0])
    out = [[0.0] * out_dim for _ in range(m)]
    for i in range(m):
        for j in range(out_dim):
            acc = 0.0
            for k in range(inner):
                acc += x[i][k] * w_t[k][j]
            out[i][j] = acc
    return out


class TestLinear:
    def test_zero_input_passes_bias(self):
        p = LinearParams(weight=np.ones((2, 3)), bias=np.array([1.0, 2.0]))
        out = linear_forward(np.zeros((1, 3)), p)
        assert np.array_equal(out, np.array([[1.0, 2.0]]))

    def test_identity_weight(self):
        p = LinearParams(weight=np.eye(2), bias=np.zeros(2))
        out = linear_forward(np.array([[5.0, -3.0]]), p)
        assert np.array_equal(out, np.array([[5.0, -3.0]]))

    def test_random_case_matches_naive_matmul(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(2, 3))
        p = LinearParams(weight=rng.normal(size=(4, 3)), bias=rng.normal(size=4))
        expected = np.array(naive_matmul(x.tolist(), p.weight.T.tolist())) + p.bias
        assert np.allclose(linear_forward(x, p), expected, atol=1e-12)

    def test_shape_mismatch_names_both_shapes(self):
        p = LinearParams(weight=np.zeros((2, 3)), bias=np.zeros(2))
        with pytest.raises(DimensionError, match=r"\(1, 4\).*\(2, 3\)"):
            linear_forward(np.zeros((1, 4)), p)

    def test_gradients_match_finite_differences(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x0 = rng.normal(size=(3, 4))
            target = rng.normal(size=(3, 2))

            def fn(params):
                p = LinearParams(weight=params["w"], bias=params["b"])
                out = linear_forward(params["x"], p)
                diff = out - target
                loss = 0.5 * float((diff * diff).sum())
                gx, gw, gb = linear_backward(diff, params["x"], p)
                return loss, {"x": gx, "w": gw, "b": gb}

            params = {"x": x0.copy(), "w": rng.normal(size=(2, 4)), "b": rng.normal(size=2)}
            assert grad_check(fn, params) < 1e-5


class TestRelu:
    def test_basic_cases(self):
        assert np.array_equal(relu(np.array([-1.0, 0.0, 2.0])), np.array([0.0, 0.0, 2.0]))
        assert np.array_equal(relu(np.array([-5.0, -0.1])), np.zeros(2))

    def test_subgradient_zero_at_zero(self):
        g = relu_backward(np.ones(3), np.array([-1.0, 0.0, 1.0]))
        assert np.array_equal(g, np.array([0.0, 0.0, 1.0]))

    def test_gradient_away_from_zero(self):
        rng = np.random.default_rng(7)
        x0 = rng.normal(size=6)
        x0[np.abs(x0) < 0.1] += 0.5  # keep probes away from the kink

        def fn(params):
            y = relu(params["x"])
            return float((y * y).sum()), {"x": relu_backward(2.0 * y, params["x"])}

        assert grad_check(fn, {"x": x0}) < 1e-6


class TestMaxpool:
    def test_single_row_is_identity(self):
        row = np.array([[3.0, -1.0, 2.0]])
        pooled, idx = maxpool_time(row)
        assert np.array_equal(pooled, row[0])
        assert np.array_equal(idx, np.zeros(3, dtype=int))

    def test_columnwise_max_by_inspection(self):
        pooled, _ = maxpool_time(np.array([[1.0, -2.0], [0.0, 5.0]]))
        assert np.array_equal(pooled, np.array([1.0, 5.0]))

    def test_tie_routes_gradient_to_first_occurrence(self):
        seq = np.array([[2.0], [2.0], [1.0]])
        _, idx = maxpool_time(seq)
        grad = maxpool_time_backward(np.array([1.0]), idx, 3)
        assert np.array_equal(grad, np.array([[1.0], [0.0], [0.0]]))

    def test_empty_sequence_rejected(self):
        with pytest.raises(DimensionError):
            maxpool_time(np.zeros((0, 4)))

    def test_gradient_at_non_tied_points(self):
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            seq0 = rng.normal(size=(5, 3)) * 2.0  # continuous draws: ties have measure zero

            def fn(params):
                pooled, idx = maxpool_time(params["seq"])
                loss = 0.5 * float((pooled * pooled).sum())
                return loss, {"seq": maxpool_time_backward(pooled, idx, params["seq"].shape[0])}

            assert grad_check(fn, {"seq": seq0}) < 1e-5


class TestLayerNorm:
    def test_constant_vector_collapses_to_beta(self):
        out, _ = layer_norm(np.full(5, 3.7), np.ones(5), np.zeros(5), eps=1e-5)
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_already_normalized_is_fixed_point(self):
        out, _ = layer_norm(np.array([1.0, -1.0]), np.ones(2), np.zeros(2), eps=1e-12)
        assert np.allclose(out, np.array([1.0, -1.0]), atol=1e-9)

    def test_gradient_random_d7(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            target = rng.normal(size=7)

            def fn(params):
                out, cache = layer_norm(params["x"], params["gamma"], params["beta"], eps=1e-5)
                diff = out - target
                gx, gg, gb = layer_norm_backward(diff, cache)
                return 0.5 * float((diff * diff).sum()), {"x": gx, "gamma": gg, "beta": gb}

            params = {
                "x": rng.normal(size=7) * 2.0,
                "gamma": rng.normal(size=7),
                "beta": rng.normal(size=7),
            }
            assert grad_check(fn, params) < 1e-5


class TestSoftmaxCrossEntropy:
    def test_uniform_logits_gives_log_c(self):
        loss, grad = softmax_cross_entropy(np.zeros(4), 0)
        assert abs(loss - math.log(4.0)) < 1e-12
        assert abs(loss - 1.386294) < 1e-6
        assert np.allclose(grad, np.array([0.25 - 1.0, 0.25, 0.25, 0.25]), atol=1e-12)

    def test_saturated_correct_class(self):
        loss, _ = softmax_cross_entropy(np.array([100.0, 0.0, 0.0]), 0)
        assert loss < 1e-12

    def test_matches_naive_formula_at_moderate_magnitudes(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            logits = rng.normal(size=5) * 3.0
            target = int(rng.integers(5))
            # naive unstabilized oracle
            e = [math.exp(v) for v in logits]
            s = sum(e)
            probs = [v / s for v in e]
            naive_loss = -math.log(probs[target])
            naive_grad = np.array(probs)
            naive_grad[target] -= 1.0
            loss, grad = softmax_cross_entropy(logits, target)
            assert abs(loss - naive_loss) < 1e-10
            assert np.allclose(grad, naive_grad, atol=1e-10)

    def test_target_out_of_range(self):
        with pytest.raises(IndexError):
            softmax_cross_entropy(np.zeros(3), 3)

    def test_gradient_matches_finite_differences(self):
        for seed in range(10):
            rng = np.random.default_rng(200 + seed)
            logits0 = rng.normal(size=6) * 2.0
            target = int(rng.integers(6))

            def fn(params):
                loss, grad = softmax_cross_entropy(params["logits"], target)
                return loss, {"logits": grad}

            assert grad_check(fn, {"logits": logits0}) < 1e-7


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=-500, max_value=500), min_size=1, max_size=12))
def test_softmax_is_probability_vector(logits):
    p = softmax(np.array(logits))
    assert (p >= 0.0).all()
    assert abs(p.sum() - 1.0) < 1e-9


def test_dropout_mask_preserves_expectation():
    rng = np.random.default_rng(11)
    values = np.ones(100_000)
    masked = values * dropout_mask(rng, values.shape, p=0.5)
    assert abs(masked.mean() - 1.0) < 0.02


def test_dropout_mask_zero_p_is_identity():
    rng = np.random.default_rng(0)
    assert np.array_equal(dropout_mask(rng, (10,), 0.0), np.ones(10))
