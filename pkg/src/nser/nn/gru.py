"""Gated recurrent unit cells and stacked bidirectional GRU with BPTT.

Gate equations (reset gate applied to the recurrent term of the candidate):

    z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
    r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
    n_t = tanh(W_n x_t + r_t * (U_n h_{t-1}) + b_n)
    h_t = (1 - z_t) * n_t + z_t * h_{t-1}

The bidirectional network runs the same cell left-to-right and right-to-left
with separate parameters and concatenates the per-step states. Stacked layers
consume the previous layer's concatenated output; inverted dropout is applied
between stacked layers only, and only in train mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nser.errors import DimensionError
from nser.nn.ops import dropout_mask, init_uniform


@dataclass
class GruLayerParams:
    input_dim: int
    hidden_dim: int
    w_z: np.ndarray  # (hidden, input)
    w_r: np.ndarray
    w_n: np.ndarray
    u_z: np.ndarray  # (hidden, hidden)
    u_r: np.ndarray
    u_n: np.ndarray
    b_z: np.ndarray  # (hidden,)
    b_r: np.ndarray
    b_n: np.ndarray

    def validate(self) -> None:
        h, i = self.hidden_dim, self.input_dim
        for name in ("w_z", "w_r", "w_n"):
            if getattr(self, name).shape != (h, i):
                raise DimensionError(
                    f"{name}: expected shape {(h, i)}, got {getattr(self, name).shape}"
                )
        for name in ("u_z", "u_r", "u_n"):
            if getattr(self, name).shape != (h, h):
                raise DimensionError(
                    f"{name}: expected shape {(h, h)}, got {getattr(self, name).shape}"
                )
        for name in ("b_z", "b_r", "b_n"):
            if getattr(self, name).shape != (h,):
                raise DimensionError(
                    f"{name}: expected shape {(h,)}, got {getattr(self, name).shape}"
                )


def init_gru_layer(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> GruLayerParams:
    return GruLayerParams(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        w_z=init_uniform(rng, (hidden_dim, input_dim), input_dim),
        w_r=init_uniform(rng, (hidden_dim, input_dim), input_dim),
        w_n=init_uniform(rng, (hidden_dim, input_dim), input_dim),
        u_z=init_uniform(rng, (hidden_dim, hidden_dim), hidden_dim),
        u_r=init_uniform(rng, (hidden_dim, hidden_dim), hidden_dim),
        u_n=init_uniform(rng, (hidden_dim, hidden_dim), hidden_dim),
        b_z=np.zeros(hidden_dim),
        b_r=np.zeros(hidden_dim),
        b_n=np.zeros(hidden_dim),
    )


@dataclass
class BiGruParams:
    # ordered (forward-direction, backward-direction) parameter pairs, one per stacked layer
    layers: list[tuple[GruLayerParams, GruLayerParams]]
    inter_layer_dropout_p: float = 0.0

    def validate(self) -> None:
        for k, (fwd, bwd) in enumerate(self.layers):
            fwd.validate()
            bwd.validate()
            if fwd.hidden_dim != bwd.hidden_dim or fwd.input_dim != bwd.input_dim:
                raise DimensionError(
                    f"stacked layer {k}: forward dims ({fwd.input_dim}, {fwd.hidden_dim}) "
                    f"!= backward dims ({bwd.input_dim}, {bwd.hidden_dim})"
                )
            if k > 0:
                expect = 2 * self.layers[k - 1][0].hidden_dim
                if fwd.input_dim != expect:
                    raise DimensionError(
                        f"stacked layer {k}: input_dim {fwd.input_dim} != "
                        f"2 x previous hidden {expect}"
                    )
        if not 0.0 <= self.inter_layer_dropout_p < 1.0:
            raise ValueError(f"inter_layer_dropout_p must be in [0, 1), got {self.inter_layer_dropout_p}")

    @property
    def out_dim(self) -> int:
        return 2 * self.layers[-1][0].hidden_dim


def gru_cell_forward(
    x_t: np.ndarray, h_prev: np.ndarray, p: GruLayerParams
) -> tuple[np.ndarray, dict]:
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x_t.shape != (p.input_dim,):
        raise DimensionError(f"gru_cell_forward: x shape {x_t.shape}, expected {(p.input_dim,)}")
    if h_prev.shape != (p.hidden_dim,):
        raise DimensionError(f"gru_cell_forward: h shape {h_prev.shape}, expected {(p.hidden_dim,)}")
    z = _sigmoid(p.w_z @ x_t + p.u_z @ h_prev + p.b_z)
    r = _sigmoid(p.w_r @ x_t + p.u_r @ h_prev + p.b_r)
    un = p.u_n @ h_prev
    n = np.tanh(p.w_n @ x_t + r * un + p.b_n)
    h = (1.0 - z) * n + z * h_prev
    cache = {"x": x_t, "h_prev": h_prev, "z": z, "r": r, "n": n, "un": un}
    return h, cache


def gru_cell_backward(
    grad_h: np.ndarray, cache: dict, p: GruLayerParams, grads: "GruLayerGrads"
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulates parameter gradients into `grads`; returns (grad_x, grad_h_prev)."""
    x, h_prev = cache["x"], cache["h_prev"]
    z, r, n, un = cache["z"], cache["r"], cache["n"], cache["un"]

    dn = grad_h * (1.0 - z)
    dz = grad_h * (h_prev - n)
    da_n = dn * (1.0 - n * n)
    da_z = dz * z * (1.0 - z)
    dun = da_n * r
    dr = da_n * un
    da_r = dr * r * (1.0 - r)

    grads.w_z += np.outer(da_z, x)
    grads.w_r += np.outer(da_r, x)
    grads.w_n += np.outer(da_n, x)
    grads.u_z += np.outer(da_z, h_prev)
    grads.u_r += np.outer(da_r, h_prev)
    grads.u_n += np.outer(dun, h_prev)
    grads.b_z += da_z
    grads.b_r += da_r
    grads.b_n += da_n

    grad_x = p.w_z.T @ da_z + p.w_r.T @ da_r + p.w_n.T @ da_n
    grad_h_prev = grad_h * z + p.u_z.T @ da_z + p.u_r.T @ da_r + p.u_n.T @ dun
    return grad_x, grad_h_prev


@dataclass
class GruLayerGrads:
    w_z: np.ndarray
    w_r: np.ndarray
    w_n: np.ndarray
    u_z: np.ndarray
    u_r: np.ndarray
    u_n: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_n: np.ndarray

    @staticmethod
    def zeros_like(p: GruLayerParams) -> "GruLayerGrads":
        return GruLayerGrads(
            w_z=np.zeros_like(p.w_z), w_r=np.zeros_like(p.w_r), w_n=np.zeros_like(p.w_n),
            u_z=np.zeros_like(p.u_z), u_r=np.zeros_like(p.u_r), u_n=np.zeros_like(p.u_n),
            b_z=np.zeros_like(p.b_z), b_r=np.zeros_like(p.b_r), b_n=np.zeros_like(p.b_n),
        )


@dataclass
class BiGruGrads:
    layers: list[tuple[GruLayerGrads, GruLayerGrads]] = field(default_factory=list)

    @staticmethod
    def zeros_like(p: BiGruParams) -> "BiGruGrads":
        return BiGruGrads(
            layers=[
                (GruLayerGrads.zeros_like(fwd), GruLayerGrads.zeros_like(bwd))
                for fwd, bwd in p.layers
            ]
        )


def _sigmoid(a: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |a|
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _run_direction(
    seq: np.ndarray, p: GruLayerParams, reverse: bool
) -> tuple[np.ndarray, list[dict]]:
    steps = range(seq.shape[0] - 1, -1, -1) if reverse else range(seq.shape[0])
    h = np.zeros(p.hidden_dim)
    out = np.zeros((seq.shape[0], p.hidden_dim))
    caches: list[dict] = [None] * seq.shape[0]  # type: ignore[list-item]
    for t in steps:
        h, caches[t] = gru_cell_forward(seq[t], h, p)
        out[t] = h
    return out, caches


def bigru_forward(
    seq: np.ndarray,
    p: BiGruParams,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Run the stacked BiGRU over a (T, input_dim) sequence.

    Returns (output (T, 2*hidden_last), cache for bigru_backward). In train
    mode an rng must be supplied when inter_layer_dropout_p > 0.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise DimensionError(f"bigru_forward: need a nonempty (T, d) sequence, got shape {seq.shape}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    p.validate()
    if seq.shape[1] != p.layers[0][0].input_dim:
        raise DimensionError(
            f"bigru_forward: input dim {seq.shape[1]} != layer 0 input_dim "
            f"{p.layers[0][0].input_dim}"
        )

    x = seq
    layer_caches = []
    for k, (fwd, bwd) in enumerate(p.layers):
        out_f, caches_f = _run_direction(x, fwd, reverse=False)
        out_b, caches_b = _run_direction(x, bwd, reverse=True)
        y = np.concatenate([out_f, out_b], axis=1)
        mask = None
        if mode == "train" and p.inter_layer_dropout_p > 0.0 and k < len(p.layers) - 1:
            if rng is None:
                raise ValueError("bigru_forward: train mode with dropout needs an rng")
            mask = dropout_mask(rng, y.shape, p.inter_layer_dropout_p)
            y = y * mask
        layer_caches.append({"x": x, "caches_f": caches_f, "caches_b": caches_b, "mask": mask})
        x = y
    return x, {"layers": layer_caches, "T": seq.shape[0]}


def _direction_backward(
    grad_states: np.ndarray,
    caches: list[dict],
    p: GruLayerParams,
    grads: GruLayerGrads,
    reverse: bool,
) -> np.ndarray:
    """BPTT for one direction; grad_states is (T, hidden) on that direction's outputs."""
    T = grad_states.shape[0]
    grad_x = np.zeros((T, p.input_dim))
    carry = np.zeros(p.hidden_dim)
    steps = range(T) if reverse else range(T - 1, -1, -1)  # reverse of the forward order
    for t in steps:
        gx, carry = gru_cell_backward(grad_states[t] + carry, caches[t], p, grads)
        grad_x[t] = gx
    return grad_x


def bigru_backward(grad_out: np.ndarray, cache: dict, p: BiGruParams) -> tuple[np.ndarray, BiGruGrads]:
    """Returns (grad_seq, parameter grads) for a bigru_forward call."""
    grads = BiGruGrads.zeros_like(p)
    g = np.asarray(grad_out, dtype=np.float64)
    for k in range(len(p.layers) - 1, -1, -1):
        lc = cache["layers"][k]
        if lc["mask"] is not None:
            g = g * lc["mask"]
        fwd, bwd = p.layers[k]
        h = fwd.hidden_dim
        gx_f = _direction_backward(g[:, :h], lc["caches_f"], fwd, grads.layers[k][0], reverse=False)
        gx_b = _direction_backward(g[:, h:], lc["caches_b"], bwd, grads.layers[k][1], reverse=True)
        g = gx_f + gx_b
    return g, grads
