"""Layer adapters (BiGRU -> temporal max pool -> ReLU -> layer norm) and the
weighted fusion of the adapted vectors.

One adapter maps a single (T, d) hidden-state matrix to a fixed vector of
dimension 2*hidden. adapt_layer is that definition, written directly on the
nn reference ops. AdapterBank executes all adapters of one side in a single
stacked pass (leading layer axis, einsum-batched), which is what training
uses; a unit test pins the bank to adapt_layer on shared parameter views.
A bank whose parameter arrays have leading size 1 while serving many layers
is a shared (tied) adapter; its gradients sum over the layer axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nser.errors import DimensionError
from nser.nn.gru import BiGruParams, GruLayerParams
from nser.nn.ops import dropout_mask, init_uniform, layer_norm, maxpool_time, relu, softmax


@dataclass
class DirectionBank:
    """One recurrence direction of one stacked level, across all adapters.

    Arrays have a leading axis Lp which is either the adapter count or 1
    (shared parameters applied to every layer).
    """

    w_z: np.ndarray  # (Lp, hidden, in)
    w_r: np.ndarray
    w_n: np.ndarray
    u_z: np.ndarray  # (Lp, hidden, hidden)
    u_r: np.ndarray
    u_n: np.ndarray
    b_z: np.ndarray  # (Lp, hidden)
    b_r: np.ndarray
    b_n: np.ndarray

    FIELDS = ("w_z", "w_r", "w_n", "u_z", "u_r", "u_n", "b_z", "b_r", "b_n")

    @property
    def hidden(self) -> int:
        return self.w_z.shape[1]

    @property
    def in_dim(self) -> int:
        return self.w_z.shape[2]


@dataclass
class AdapterBank:
    """All adapters of one side: stacked BiGRU levels plus the post block."""

    num_layers: int  # how many representation layers this bank serves
    levels: list[tuple[DirectionBank, DirectionBank]]  # (forward, backward) per level
    ln_gamma: np.ndarray  # (Lp, out_dim)
    ln_beta: np.ndarray
    dropout_p: float
    ln_eps: float

    @property
    def shared(self) -> bool:
        return self.ln_gamma.shape[0] == 1 and self.num_layers != 1

    @property
    def hidden(self) -> int:
        return self.levels[-1][0].hidden

    @property
    def out_dim(self) -> int:
        return 2 * self.hidden

    @property
    def in_dim(self) -> int:
        return self.levels[0][0].in_dim

    def layer_view(self, layer: int) -> "AdapterLayerView":
        """Per-layer parameter view (no copies) in nn-core terms."""
        lp = 0 if self.ln_gamma.shape[0] == 1 else layer
        pairs = []
        for fwd, bwd in self.levels:
            pairs.append((_layer_params(fwd, lp), _layer_params(bwd, lp)))
        return AdapterLayerView(
            bigru=BiGruParams(layers=pairs, inter_layer_dropout_p=self.dropout_p),
            ln_gamma=self.ln_gamma[lp],
            ln_beta=self.ln_beta[lp],
            ln_eps=self.ln_eps,
        )


def _layer_params(bank: DirectionBank, lp: int) -> GruLayerParams:
    return GruLayerParams(
        input_dim=bank.in_dim,
        hidden_dim=bank.hidden,
        w_z=bank.w_z[lp], w_r=bank.w_r[lp], w_n=bank.w_n[lp],
        u_z=bank.u_z[lp], u_r=bank.u_r[lp], u_n=bank.u_n[lp],
        b_z=bank.b_z[lp], b_r=bank.b_r[lp], b_n=bank.b_n[lp],
    )


@dataclass
class AdapterLayerView:
    """One adapter's parameters, as seen by adapt_layer."""

    bigru: BiGruParams
    ln_gamma: np.ndarray
    ln_beta: np.ndarray
    ln_eps: float


def adapt_layer(
    H: np.ndarray,
    adapter: AdapterLayerView,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """layer_norm(relu(maxpool_time(bigru(H)))) for a single (T, d) layer."""
    from nser.nn.gru import bigru_forward  # local import keeps module load cheap

    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] < 1:
        raise DimensionError(f"adapt_layer: need a nonempty (T, d) matrix, got shape {H.shape}")
    if H.shape[1] != adapter.bigru.layers[0][0].input_dim:
        raise DimensionError(
            f"adapt_layer: feature dim {H.shape[1]} != adapter input dim "
            f"{adapter.bigru.layers[0][0].input_dim}"
        )
    states, _ = bigru_forward(H, adapter.bigru, mode=mode, rng=rng)
    pooled, _ = maxpool_time(states)
    activated = relu(pooled)
    out, _ = layer_norm(activated, adapter.ln_gamma, adapter.ln_beta, adapter.ln_eps)
    return out


def init_adapter_bank(
    rng: np.random.Generator,
    num_layers: int,
    feature_dim: int,
    hidden: int,
    depth: int,
    dropout_p: float,
    ln_eps: float,
    shared: bool = False,
) -> AdapterBank:
    lp = 1 if shared else num_layers
    levels = []
    for k in range(depth):
        in_k = feature_dim if k == 0 else 2 * hidden
        dirs = []
        for _ in range(2):  # forward then backward direction
            dirs.append(
                DirectionBank(
                    w_z=init_uniform(rng, (lp, hidden, in_k), in_k),
                    w_r=init_uniform(rng, (lp, hidden, in_k), in_k),
                    w_n=init_uniform(rng, (lp, hidden, in_k), in_k),
                    u_z=init_uniform(rng, (lp, hidden, hidden), hidden),
                    u_r=init_uniform(rng, (lp, hidden, hidden), hidden),
                    u_n=init_uniform(rng, (lp, hidden, hidden), hidden),
                    b_z=np.zeros((lp, hidden)),
                    b_r=np.zeros((lp, hidden)),
                    b_n=np.zeros((lp, hidden)),
                )
            )
        levels.append((dirs[0], dirs[1]))
    return AdapterBank(
        num_layers=num_layers,
        levels=levels,
        ln_gamma=np.ones((lp, 2 * hidden)),
        ln_beta=np.zeros((lp, 2 * hidden)),
        dropout_p=dropout_p,
        ln_eps=ln_eps,
    )


def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _bcast(arr: np.ndarray, L: int) -> np.ndarray:
    if arr.shape[0] == L:
        return arr
    return np.broadcast_to(arr, (L,) + arr.shape[1:])


def _direction_pass(X: np.ndarray, d: DirectionBank, reverse: bool) -> tuple[np.ndarray, dict]:
    """All-adapters recurrence in one direction. X is (L, T, in)."""
    L, T, _ = X.shape
    h_dim = d.hidden
    w_z, w_r, w_n = _bcast(d.w_z, L), _bcast(d.w_r, L), _bcast(d.w_n, L)
    u_z, u_r, u_n = _bcast(d.u_z, L), _bcast(d.u_r, L), _bcast(d.u_n, L)
    # input projections for the whole sequence, then a cheap recurrent loop
    pz = np.einsum("lhi,lti->lth", w_z, X) + d.b_z[:, None, :]
    pr = np.einsum("lhi,lti->lth", w_r, X) + d.b_r[:, None, :]
    pn = np.einsum("lhi,lti->lth", w_n, X) + d.b_n[:, None, :]

    z_all = np.empty((L, T, h_dim))
    r_all = np.empty((L, T, h_dim))
    n_all = np.empty((L, T, h_dim))
    un_all = np.empty((L, T, h_dim))
    hprev_all = np.empty((L, T, h_dim))
    out = np.empty((L, T, h_dim))

    h = np.zeros((L, h_dim))
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        hprev_all[:, t] = h
        z = _sigmoid(pz[:, t] + np.einsum("lij,lj->li", u_z, h))
        r = _sigmoid(pr[:, t] + np.einsum("lij,lj->li", u_r, h))
        un = np.einsum("lij,lj->li", u_n, h)
        n = np.tanh(pn[:, t] + r * un)
        h = (1.0 - z) * n + z * h
        z_all[:, t] = z
        r_all[:, t] = r
        n_all[:, t] = n
        un_all[:, t] = un
        out[:, t] = h
    cache = {"X": X, "z": z_all, "r": r_all, "n": n_all, "un": un_all, "hprev": hprev_all}
    return out, cache


def _direction_backward(
    grad_states: np.ndarray, cache: dict, d: DirectionBank, reverse: bool
) -> tuple[np.ndarray, dict]:
    """BPTT over the stacked direction; returns (grad_X, param grads)."""
    X = cache["X"]
    z_all, r_all, n_all, un_all = cache["z"], cache["r"], cache["n"], cache["un"]
    hprev_all = cache["hprev"]
    L, T, h_dim = grad_states.shape
    u_z, u_r, u_n = _bcast(d.u_z, L), _bcast(d.u_r, L), _bcast(d.u_n, L)

    daz = np.empty((L, T, h_dim))
    dar = np.empty((L, T, h_dim))
    dan = np.empty((L, T, h_dim))
    dun = np.empty((L, T, h_dim))

    dh = np.zeros((L, h_dim))
    steps = range(T) if reverse else range(T - 1, -1, -1)  # reverse of forward order
    for t in steps:
        g = grad_states[:, t] + dh
        z, r, n, un, hprev = z_all[:, t], r_all[:, t], n_all[:, t], un_all[:, t], hprev_all[:, t]
        dn = g * (1.0 - z)
        dz = g * (hprev - n)
        da_n = dn * (1.0 - n * n)
        da_z = dz * z * (1.0 - z)
        dun_t = da_n * r
        dr = da_n * un
        da_r = dr * r * (1.0 - r)
        daz[:, t], dar[:, t], dan[:, t], dun[:, t] = da_z, da_r, da_n, dun_t
        dh = (
            g * z
            + np.einsum("lij,li->lj", u_z, da_z)
            + np.einsum("lij,li->lj", u_r, da_r)
            + np.einsum("lij,li->lj", u_n, dun_t)
        )

    shared = d.w_z.shape[0] == 1 and L > 1

    def reduce(g: np.ndarray) -> np.ndarray:
        return g.sum(axis=0, keepdims=True) if shared else g

    grads = {
        "w_z": reduce(np.einsum("lth,lti->lhi", daz, X)),
        "w_r": reduce(np.einsum("lth,lti->lhi", dar, X)),
        "w_n": reduce(np.einsum("lth,lti->lhi", dan, X)),
        "u_z": reduce(np.einsum("lth,ltj->lhj", daz, hprev_all)),
        "u_r": reduce(np.einsum("lth,ltj->lhj", dar, hprev_all)),
        "u_n": reduce(np.einsum("lth,ltj->lhj", dun, hprev_all)),
        "b_z": reduce(daz.sum(axis=1)),
        "b_r": reduce(dar.sum(axis=1)),
        "b_n": reduce(dan.sum(axis=1)),
    }
    w_z, w_r, w_n = _bcast(d.w_z, L), _bcast(d.w_r, L), _bcast(d.w_n, L)
    grad_X = (
        np.einsum("lth,lhi->lti", daz, w_z)
        + np.einsum("lth,lhi->lti", dar, w_r)
        + np.einsum("lth,lhi->lti", dan, w_n)
    )
    return grad_X, grads


def bank_forward(
    bank: AdapterBank,
    X: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Adapt all layers of one side at once. X is (L, T, d) -> (L, out_dim)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[0] != bank.num_layers or X.shape[1] < 1:
        raise DimensionError(
            f"bank_forward: expected ({bank.num_layers}, T>=1, {bank.in_dim}) input, got shape {X.shape}"
        )
    if X.shape[2] != bank.in_dim:
        raise DimensionError(
            f"bank_forward: feature dim {X.shape[2]} != adapter input dim {bank.in_dim}"
        )
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")

    level_caches = []
    cur = X
    for k, (fwd, bwd) in enumerate(bank.levels):
        out_f, cache_f = _direction_pass(cur, fwd, reverse=False)
        out_b, cache_b = _direction_pass(cur, bwd, reverse=True)
        y = np.concatenate([out_f, out_b], axis=2)
        mask = None
        if mode == "train" and bank.dropout_p > 0.0 and k < len(bank.levels) - 1:
            if rng is None:
                raise ValueError("bank_forward: train mode with dropout needs an rng")
            mask = dropout_mask(rng, y.shape, bank.dropout_p)
            y = y * mask
        level_caches.append({"f": cache_f, "b": cache_b, "mask": mask})
        cur = y

    argmax = np.argmax(cur, axis=1)  # (L, out_dim), first max on ties
    pooled = np.take_along_axis(cur, argmax[:, None, :], axis=1)[:, 0, :]
    activated = np.maximum(pooled, 0.0)

    gamma = _bcast(bank.ln_gamma, X.shape[0])
    beta = _bcast(bank.ln_beta, X.shape[0])
    mean = activated.mean(axis=1, keepdims=True)
    var = activated.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + bank.ln_eps)
    xhat = (activated - mean) * inv_std
    out = xhat * gamma + beta

    cache = {
        "levels": level_caches,
        "T": X.shape[1],
        "argmax": argmax,
        "pooled": pooled,
        "xhat": xhat,
        "inv_std": inv_std,
    }
    return out, cache


def bank_backward(bank: AdapterBank, grad_out: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
    """Returns (grad_X, grads dict keyed like parameter_dict naming below)."""
    L = grad_out.shape[0]
    gamma = _bcast(bank.ln_gamma, L)
    xhat, inv_std = cache["xhat"], cache["inv_std"]

    shared = bank.ln_gamma.shape[0] == 1 and L > 1
    g_gamma = grad_out * xhat
    g_beta = grad_out
    if shared:
        g_gamma = g_gamma.sum(axis=0, keepdims=True)
        g_beta = g_beta.sum(axis=0, keepdims=True)
    dxhat = grad_out * gamma
    d_act = inv_std * (
        dxhat
        - dxhat.mean(axis=1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
    )
    d_pool = d_act * (cache["pooled"] > 0.0)

    g = np.zeros((L, cache["T"], d_pool.shape[1]))
    np.put_along_axis(g, cache["argmax"][:, None, :], d_pool[:, None, :], axis=1)

    grads: dict[str, np.ndarray] = {"ln.gamma": g_gamma, "ln.beta": g_beta}
    h_dim = bank.hidden
    for k in range(len(bank.levels) - 1, -1, -1):
        lc = cache["levels"][k]
        if lc["mask"] is not None:
            g = g * lc["mask"]
        fwd, bwd = bank.levels[k]
        gx_f, grads_f = _direction_backward(g[:, :, :h_dim], lc["f"], fwd, reverse=False)
        gx_b, grads_b = _direction_backward(g[:, :, h_dim:], lc["b"], bwd, reverse=True)
        for field in DirectionBank.FIELDS:
            grads[f"k{k}.f.{field}"] = grads_f[field]
            grads[f"k{k}.b.{field}"] = grads_b[field]
        g = gx_f + gx_b
    return g, grads


def fuse(
    adapted: np.ndarray,
    fusion_logits: np.ndarray,
    norm: str = "softmax",
    enc_slots: int | None = None,
) -> tuple[np.ndarray, dict]:
    """Weighted sum of adapted vectors: h* = sum_k weight_k * adapted[k].

    norm selects the weighting: "softmax" (one softmax over all logits, the
    default), "softmax_per_side" (separate softmax over the first enc_slots
    and the remainder, the two sums added), or "raw" (weights = logits).
    """
    adapted = np.asarray(adapted, dtype=np.float64)
    fusion_logits = np.asarray(fusion_logits, dtype=np.float64)
    if adapted.ndim != 2 or adapted.shape[0] != fusion_logits.shape[0]:
        raise DimensionError(
            f"fuse: {adapted.shape[0] if adapted.ndim == 2 else 'non-2d'} vectors vs "
            f"{fusion_logits.shape[0]} logits"
        )
    if norm == "softmax":
        weights = softmax(fusion_logits)
    elif norm == "softmax_per_side":
        if enc_slots is None:
            raise ValueError("fuse: softmax_per_side needs enc_slots")
        parts = []
        if enc_slots > 0:
            parts.append(softmax(fusion_logits[:enc_slots]))
        if enc_slots < fusion_logits.shape[0]:
            parts.append(softmax(fusion_logits[enc_slots:]))
        weights = np.concatenate(parts)
    elif norm == "raw":
        weights = fusion_logits.copy()
    else:
        raise ValueError(f"fuse: unknown norm {norm!r}")
    fused = weights @ adapted
    return fused, {"adapted": adapted, "weights": weights, "norm": norm, "enc_slots": enc_slots}


def fuse_backward(grad_fused: np.ndarray, cache: dict) -> tuple[np.ndarray, np.ndarray]:
    """Returns (grad_adapted (K, D), grad_logits (K,))."""
    adapted, weights = cache["adapted"], cache["weights"]
    grad_adapted = np.outer(weights, grad_fused)
    dweights = adapted @ grad_fused
    norm = cache["norm"]
    if norm == "raw":
        grad_logits = dweights
    elif norm == "softmax":
        grad_logits = weights * (dweights - float(weights @ dweights))
    else:  # softmax_per_side
        k = cache["enc_slots"]
        grad_logits = np.empty_like(dweights)
        for seg in (slice(0, k), slice(k, None)):
            w = weights[seg]
            if w.size:
                grad_logits[seg] = w * (dweights[seg] - float(w @ dweights[seg]))
    return grad_adapted, grad_logits
