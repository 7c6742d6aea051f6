"""GRU cell and stacked BiGRU tests.

The derived oracle for the cell is a scalar-by-scalar re-evaluation of the
gate formulas with math.exp/math.tanh; gradients are checked against central
finite differences.
"""

import math

import numpy as np
import pytest

from nser.errors import DimensionError
from nser.nn import (
    BiGruParams,
    GruLayerParams,
    bigru_backward,
    bigru_forward,
    grad_check,
    gru_cell_forward,
    init_gru_layer,
)
from nser.nn.gru import BiGruGrads


def random_layer(rng, input_dim, hidden_dim):
    return init_gru_layer(rng, input_dim, hidden_dim)


def scalar_gru_reference(x, h_prev, p):
    """Per-element evaluation of the gate equations, no vectorized ops."""
    H, I = p.hidden_dim, p.input_dim

    def sig(a):
        return 1.0 / (1.0 + math.exp(-a))

    h_out = []
    for i in range(H):
        az = p.b_z[i] + sum(p.w_z[i][k] * x[k] for k in range(I)) + sum(
            p.u_z[i][k] * h_prev[k] for k in range(H)
        )
        ar = p.b_r[i] + sum(p.w_r[i][k] * x[k] for k in range(I)) + sum(
            p.u_r[i][k] * h_prev[k] for k in range(H)
        )
        un = sum(p.u_n[i][k] * h_prev[k] for k in range(H))
        z = sig(az)
        r = sig(ar)
        n = math.tanh(p.b_n[i] + sum(p.w_n[i][k] * x[k] for k in range(I)) + r * un)
        h_out.append((1.0 - z) * n + z * h_prev[i])
    return np.array(h_out)


class TestGruCell:
    def test_zero_fixed_point(self):
        rng = np.random.default_rng(0)
        p = random_layer(rng, 3, 4)
        p.b_z[:] = 0.0
        p.b_r[:] = 0.0
        p.b_n[:] = 0.0
        h, _ = gru_cell_forward(np.zeros(3), np.zeros(4), p)
        assert np.array_equal(h, np.zeros(4))

    def test_saturated_update_gate_carries_state(self):
        rng = np.random.default_rng(1)
        p = random_layer(rng, 3, 4)
        p.b_z[:] = 50.0  # z ~= 1 so h_t ~= h_prev
        h_prev = rng.normal(size=4)
        h, _ = gru_cell_forward(rng.normal(size=3), h_prev, p)
        assert np.max(np.abs(h - h_prev)) < 1e-9

    def test_random_case_matches_scalar_reference(self):
        rng = np.random.default_rng(42)
        p = random_layer(rng, 3, 3)
        p.b_z[:] = rng.normal(size=3)
        p.b_r[:] = rng.normal(size=3)
        p.b_n[:] = rng.normal(size=3)
        x = rng.normal(size=3)
        h_prev = rng.normal(size=3)
        h, _ = gru_cell_forward(x, h_prev, p)
        assert np.allclose(h, scalar_gru_reference(x, h_prev, p), atol=1e-12)

    def test_dimension_mismatch(self):
        p = random_layer(np.random.default_rng(0), 3, 4)
        with pytest.raises(DimensionError):
            gru_cell_forward(np.zeros(5), np.zeros(4), p)
        with pytest.raises(DimensionError):
            gru_cell_forward(np.zeros(3), np.zeros(2), p)


def make_bigru(rng, input_dim, hidden, depth, dropout=0.0):
    layers = []
    for k in range(depth):
        in_k = input_dim if k == 0 else 2 * hidden
        layers.append((random_layer(rng, in_k, hidden), random_layer(rng, in_k, hidden)))
    return BiGruParams(layers=layers, inter_layer_dropout_p=dropout)


class TestBiGru:
    def test_single_step_concatenates_both_cells(self):
        rng = np.random.default_rng(2)
        p = make_bigru(rng, 3, 4, depth=1)
        x = rng.normal(size=(1, 3))
        out, _ = bigru_forward(x, p)
        hf, _ = gru_cell_forward(x[0], np.zeros(4), p.layers[0][0])
        hb, _ = gru_cell_forward(x[0], np.zeros(4), p.layers[0][1])
        assert np.array_equal(out[0], np.concatenate([hf, hb]))

    def test_eval_mode_ignores_dropout(self):
        rng = np.random.default_rng(3)
        p = make_bigru(rng, 3, 4, depth=2, dropout=0.5)
        x = rng.normal(size=(6, 3))
        out_p, _ = bigru_forward(x, p, mode="eval")
        p.inter_layer_dropout_p = 0.0
        out_0, _ = bigru_forward(x, p, mode="eval")
        assert np.array_equal(out_p, out_0)

    def test_reversal_swaps_direction_roles_with_tied_params(self):
        rng = np.random.default_rng(4)
        shared = random_layer(rng, 3, 4)
        p = BiGruParams(layers=[(shared, shared)])
        x = rng.normal(size=(5, 3))
        out, _ = bigru_forward(x, p)
        out_rev, _ = bigru_forward(x[::-1], p)
        T, h = 5, 4
        for t in range(T):
            assert np.allclose(out_rev[t, :h], out[T - 1 - t, h:], atol=1e-12)
            assert np.allclose(out_rev[t, h:], out[T - 1 - t, :h], atol=1e-12)

    def test_empty_sequence_rejected(self):
        p = make_bigru(np.random.default_rng(0), 3, 4, depth=1)
        with pytest.raises(DimensionError):
            bigru_forward(np.zeros((0, 3)), p)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        p = make_bigru(rng, 3, 4, depth=2, dropout=0.5)
        x = rng.normal(size=(7, 3))
        out1, _ = bigru_forward(x, p, mode="train", rng=np.random.default_rng(99))
        out2, _ = bigru_forward(x, p, mode="train", rng=np.random.default_rng(99))
        assert np.array_equal(out1, out2)

    def test_train_differs_from_eval_under_dropout(self):
        rng = np.random.default_rng(6)
        p = make_bigru(rng, 3, 4, depth=2, dropout=0.5)
        x = rng.normal(size=(7, 3))
        out_train, _ = bigru_forward(x, p, mode="train", rng=np.random.default_rng(1))
        out_eval, _ = bigru_forward(x, p, mode="eval")
        assert not np.array_equal(out_train, out_eval)


def _collect_params(p: BiGruParams) -> dict[str, np.ndarray]:
    out = {}
    for k, (fwd, bwd) in enumerate(p.layers):
        for tag, layer in (("f", fwd), ("b", bwd)):
            for field in ("w_z", "w_r", "w_n", "u_z", "u_r", "u_n", "b_z", "b_r", "b_n"):
                out[f"l{k}.{tag}.{field}"] = getattr(layer, field)
    return out


def _collect_grads(g: BiGruGrads) -> dict[str, np.ndarray]:
    out = {}
    for k, (fwd, bwd) in enumerate(g.layers):
        for tag, layer in (("f", fwd), ("b", bwd)):
            for field in ("w_z", "w_r", "w_n", "u_z", "u_r", "u_n", "b_z", "b_r", "b_n"):
                out[f"l{k}.{tag}.{field}"] = getattr(layer, field)
    return out


class TestBiGruGradients:
    @pytest.mark.parametrize("depth", [1, 2])
    def test_bptt_matches_finite_differences(self, depth):
        for seed in range(5):
            rng = np.random.default_rng(300 + seed)
            p = make_bigru(rng, 3, 2, depth=depth)
            x0 = rng.normal(size=(4, 3))
            target = rng.normal(size=(4, 2 * 2))

            def fn(params):
                # params aliases the live arrays inside p
                out, cache = bigru_forward(params["x"], p)
                diff = out - target
                loss = 0.5 * float((diff * diff).sum())
                gx, grads = bigru_backward(diff, cache, p)
                flat = _collect_grads(grads)
                flat["x"] = gx
                return loss, flat

            params = _collect_params(p)
            params["x"] = x0
            assert grad_check(fn, params, sample=20, rng=np.random.default_rng(0)) < 1e-6

    def test_bptt_through_fixed_dropout_mask(self):
        rng = np.random.default_rng(8)
        p = make_bigru(rng, 3, 2, depth=2, dropout=0.5)
        x0 = rng.normal(size=(4, 3))

        def fn(params):
            # identical rng per call keeps the mask fixed across FD probes
            out, cache = bigru_forward(params["x"], p, mode="train", rng=np.random.default_rng(17))
            loss = 0.5 * float((out * out).sum())
            gx, grads = bigru_backward(out, cache, p)
            flat = _collect_grads(grads)
            flat["x"] = gx
            return loss, flat

        params = _collect_params(p)
        params["x"] = x0
        assert grad_check(fn, params, sample=15, rng=np.random.default_rng(1)) < 1e-6
