"""Minimal differentiable numeric kernel.

A fixed, closed set of ops, each with an explicit forward and backward;
no autodiff graph. All arrays are float64; callers own the parameter
containers and pass them explicitly.
"""

from nser.nn.adam import AdamState, adam_step
from nser.nn.gradcheck import GradientCheckFailure, grad_check
from nser.nn.gru import (
    BiGruParams,
    GruLayerParams,
    bigru_backward,
    bigru_forward,
    gru_cell_backward,
    gru_cell_forward,
    init_gru_layer,
)
from nser.nn.ops import (
    LinearParams,
    dropout_mask,
    init_linear,
    init_uniform,
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

__all__ = [
    "AdamState",
    "adam_step",
    "GradientCheckFailure",
    "grad_check",
    "BiGruParams",
    "GruLayerParams",
    "bigru_backward",
    "bigru_forward",
    "gru_cell_backward",
    "gru_cell_forward",
    "init_gru_layer",
    "LinearParams",
    "dropout_mask",
    "init_linear",
    "init_uniform",
    "layer_norm",
    "layer_norm_backward",
    "linear_backward",
    "linear_forward",
    "maxpool_time",
    "maxpool_time_backward",
    "relu",
    "relu_backward",
    "softmax",
    "softmax_cross_entropy",
]
