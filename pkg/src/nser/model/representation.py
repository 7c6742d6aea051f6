"""The per-utterance stack of layer representations consumed by the model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nser.errors import DimensionError


@dataclass
class LayeredRepresentation:
    """Encoder and decoder hidden-state stacks for one utterance.

    encoder_layers: L_e matrices, each (m, d); decoder_layers: L_d matrices,
    each (n, d). The decoder stack may be empty (encoder-only use).
    """

    utterance_id: str
    encoder_layers: list[np.ndarray]
    decoder_layers: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(self.encoder_layers) < 1:
            raise DimensionError(
                f"{self.utterance_id!r}: need at least one encoder layer, got 0"
            )
        m, d = self.encoder_layers[0].shape
        if m < 1 or d < 1:
            raise DimensionError(f"{self.utterance_id!r}: empty encoder matrix {self.encoder_layers[0].shape}")
        for i, h in enumerate(self.encoder_layers):
            if h.shape != (m, d):
                raise DimensionError(
                    f"{self.utterance_id!r}: encoder layer {i} shape {h.shape} != layer 0 shape {(m, d)}"
                )
        if self.decoder_layers:
            n = self.decoder_layers[0].shape[0]
            for i, h in enumerate(self.decoder_layers):
                if h.shape != (n, d):
                    raise DimensionError(
                        f"{self.utterance_id!r}: decoder layer {i} shape {h.shape} != expected {(n, d)}"
                    )

    @property
    def d(self) -> int:
        return self.encoder_layers[0].shape[1]

    @property
    def m(self) -> int:
        return self.encoder_layers[0].shape[0]

    @property
    def n(self) -> int:
        return self.decoder_layers[0].shape[0] if self.decoder_layers else 0

    @property
    def num_encoder_layers(self) -> int:
        return len(self.encoder_layers)

    @property
    def num_decoder_layers(self) -> int:
        return len(self.decoder_layers)
