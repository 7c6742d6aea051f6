"""Elementwise and affine ops with explicit backward passes.

Forward functions return (output, cache); the matching *_backward takes
(grad_out, cache) and returns input/parameter gradients. Everything is
float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nser.errors import DimensionError


def init_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Weights ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))."""
    bound = 1.0 / np.sqrt(float(fan_in))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class LinearParams:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


def init_linear(rng: np.random.Generator, in_dim: int, out_dim: int) -> LinearParams:
    return LinearParams(
        weight=init_uniform(rng, (out_dim, in_dim), in_dim),
        bias=np.zeros(out_dim),
    )


def linear_forward(x: np.ndarray, p: LinearParams) -> np.ndarray:
    """out[i] = p.weight @ x[i] + p.bias, rowwise over a (m, in) batch."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != p.in_dim:
        raise DimensionError(
            f"linear_forward: input shape {x.shape} does not match "
            f"weight shape {p.weight.shape}"
        )
    return x @ p.weight.T + p.bias


def linear_backward(
    grad_out: np.ndarray, x: np.ndarray, p: LinearParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_x, grad_weight, grad_bias)."""
    grad_out = np.atleast_2d(grad_out)
    x = np.atleast_2d(x)
    grad_x = grad_out @ p.weight
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    return grad_x, grad_w, grad_b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    # subgradient 0 at exactly 0
    return grad_out * (x > 0.0)


def maxpool_time(seq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Columnwise max over the time axis of a (T, d) sequence.

    Returns (pooled (d,), argmax (d,)). Ties go to the first occurrence,
    which is where the backward pass routes the gradient.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise DimensionError(f"maxpool_time: need a nonempty (T, d) sequence, got shape {seq.shape}")
    idx = np.argmax(seq, axis=0)
    return seq[idx, np.arange(seq.shape[1])], idx


def maxpool_time_backward(grad_out: np.ndarray, argmax: np.ndarray, seq_len: int) -> np.ndarray:
    grad_seq = np.zeros((seq_len, grad_out.shape[0]))
    grad_seq[argmax, np.arange(grad_out.shape[0])] = grad_out
    return grad_seq


def layer_norm(
    x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float
) -> tuple[np.ndarray, dict]:
    """(x - mean) / sqrt(var + eps) * gamma + beta, population variance."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean()
    var = x.var()  # ddof=0
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv_std
    cache = {"xhat": xhat, "inv_std": inv_std, "gamma": gamma}
    return xhat * gamma + beta, cache


def layer_norm_backward(
    grad_out: np.ndarray, cache: dict
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_x, grad_gamma, grad_beta)."""
    xhat = cache["xhat"]
    inv_std = cache["inv_std"]
    gamma = cache["gamma"]
    grad_gamma = grad_out * xhat
    grad_beta = grad_out.copy()
    dxhat = grad_out * gamma
    grad_x = inv_std * (dxhat - dxhat.mean() - xhat * (dxhat * xhat).mean())
    return grad_x, grad_gamma, grad_beta


def dropout_mask(rng: np.random.Generator, shape: tuple[int, ...], p: float) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability p, survivors scaled 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= p) / (1.0 - p)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stabilized softmax along the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """loss = -log softmax(logits)[target] via log-sum-exp; grad = softmax - onehot."""
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    if not 0 <= target < n:
        raise IndexError(f"softmax_cross_entropy: target {target} out of range for {n} classes")
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    loss = lse - logits[target]
    grad = softmax(logits)
    grad[target] -= 1.0
    return float(loss), grad
