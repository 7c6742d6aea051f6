"""Adam optimizer tests; derived oracle is a hand-rolled scalar recursion."""

import numpy as np
import pytest

from nser.errors import DimensionError
from nser.nn import AdamState, adam_step, grad_check


def scalar_adam_reference(p0, grads, lr, beta1, beta2, eps):
    """Plain-float Adam recursion, one parameter, bias-corrected."""
    p, m, v = p0, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        mhat = m / (1.0 - beta1**t)
        vhat = v / (1.0 - beta2**t)
        p = p - lr * mhat / (vhat**0.5 + eps)
    return p


class TestAdam:
    def test_zero_gradient_zero_moments_is_identity(self):
        params = {"w": np.array([1.0, -2.0, 3.0])}
        state = AdamState(lr=0.1)
        adam_step(params, {"w": np.zeros(3)}, state)
        assert np.array_equal(params["w"], np.array([1.0, -2.0, 3.0]))
        assert state.step == 1

    def test_first_step_magnitude_is_lr(self):
        params = {"w": np.array([0.5, -0.5])}
        state = AdamState(lr=1e-3)
        g = np.array([2.0, -7.0])
        adam_step(params, {"w": g.copy()}, state)
        delta = params["w"] - np.array([0.5, -0.5])
        # bias-corrected first step: -lr * g / (|g| + eps') ~= -lr * sign(g)
        assert np.allclose(delta, -1e-3 * np.sign(g), rtol=1e-6)

    def test_three_step_trajectory_matches_scalar_recursion(self):
        lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
        grads = [0.3, -1.2, 0.7]
        expected = scalar_adam_reference(2.0, grads, lr, b1, b2, eps)
        params = {"w": np.array([2.0])}
        state = AdamState(lr=lr, beta1=b1, beta2=b2, eps=eps)
        for g in grads:
            adam_step(params, {"w": np.array([g])}, state)
        assert abs(params["w"][0] - expected) < 1e-12
        assert state.step == 3

    def test_shape_mismatch(self):
        state = AdamState()
        with pytest.raises(DimensionError, match=r"\(2,\).*\(3,\)"):
            adam_step({"w": np.zeros(3)}, {"w": np.zeros(2)}, state)

    def test_step_counter_increases_monotonically(self):
        params = {"w": np.zeros(2)}
        state = AdamState()
        for expected in (1, 2, 3, 4):
            adam_step(params, {"w": np.ones(2)}, state)
            assert state.step == expected


class TestGradCheckUtility:
    def test_quadratic_loss(self):
        def fn(params):
            w = params["w"]
            return float((w**2).sum()), {"w": 2.0 * w}

        err = grad_check(fn, {"w": np.array([3.0])})
        assert err < 1e-8

    def test_detects_wrong_gradient(self):
        def fn(params):
            w = params["w"]
            return float((w**2).sum()), {"w": 3.0 * w}  # deliberately wrong

        err = grad_check(fn, {"w": np.array([3.0])})
        assert err > 1e-2

    def test_tolerance_raises(self):
        from nser.nn import GradientCheckFailure

        def fn(params):
            w = params["w"]
            return float((w**2).sum()), {"w": 3.0 * w}

        with pytest.raises(GradientCheckFailure):
            grad_check(fn, {"w": np.array([3.0])}, tolerance=1e-4)
