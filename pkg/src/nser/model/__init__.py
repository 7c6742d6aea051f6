"""Per-layer BiGRU adapters over ASR hidden-state stacks, learnable layer
fusion, and the emotion classifier head."""

from nser.model.adapter import (
    AdapterBank,
    AdapterLayerView,
    DirectionBank,
    adapt_layer,
    fuse,
    fuse_backward,
    init_adapter_bank,
)
from nser.model.network import (
    AdapterStack,
    EmotionClassifierParams,
    configure,
    forward,
    init_classifier,
    loss_and_grads,
    parameter_dict,
    train_step,
    trainable_names,
)
from nser.model.representation import LayeredRepresentation

__all__ = [
    "AdapterBank",
    "AdapterLayerView",
    "DirectionBank",
    "adapt_layer",
    "fuse",
    "fuse_backward",
    "init_adapter_bank",
    "AdapterStack",
    "EmotionClassifierParams",
    "configure",
    "forward",
    "init_classifier",
    "loss_and_grads",
    "parameter_dict",
    "train_step",
    "trainable_names",
    "LayeredRepresentation",
]
