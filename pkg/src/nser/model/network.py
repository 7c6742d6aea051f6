"""Model assembly: adapter banks per side, fusion, classifier, training step.

Three representation variants share one machinery:
    adapter -- one adapter per layer, learnable fusion logits
    mean    -- one shared adapter per side applied to every layer,
               fusion logits frozen at equal weights
    last    -- only the final layer of each participating side, its own adapter
Sides participate according to mode: encoder-only, decoder-only, or
encoder+decoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nser import rng as rngmod
from nser.errors import ConfigError, DimensionError
from nser.model.adapter import (
    AdapterBank,
    bank_backward,
    bank_forward,
    fuse,
    fuse_backward,
    init_adapter_bank,
)
from nser.model.representation import LayeredRepresentation
from nser.nn.adam import AdamState, adam_step
from nser.nn.ops import LinearParams, init_linear, softmax, softmax_cross_entropy

MODES = ("encoder-only", "decoder-only", "encoder+decoder")
VARIANTS = ("adapter", "mean", "last")
FUSION_NORMS = ("softmax", "softmax_per_side", "raw")


@dataclass
class EmotionClassifierParams:
    fc: LinearParams
    class_names: list[str]

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise ConfigError(f"need at least 2 classes, got {len(self.class_names)}")
        if self.fc.out_dim != len(self.class_names):
            raise DimensionError(
                f"classifier output dim {self.fc.out_dim} != {len(self.class_names)} classes"
            )


@dataclass
class AdapterStack:
    mode: str
    variant: str
    enc_layers: int  # expected representation layer counts (0 when side unused)
    dec_layers: int
    feature_dim: int
    encoder_bank: AdapterBank | None
    decoder_bank: AdapterBank | None
    fusion_logits: np.ndarray
    fusion_norm: str = "softmax"

    @property
    def adapter_out_dim(self) -> int:
        bank = self.encoder_bank if self.encoder_bank is not None else self.decoder_bank
        return bank.out_dim

    @property
    def enc_slots(self) -> int:
        return self.encoder_bank.num_layers if self.encoder_bank is not None else 0

    @property
    def dec_slots(self) -> int:
        return self.decoder_bank.num_layers if self.decoder_bank is not None else 0

    def fusion_weights(self) -> np.ndarray:
        """Effective weights over the participating slots."""
        if self.fusion_norm == "raw":
            return self.fusion_logits.copy()
        if self.fusion_norm == "softmax_per_side" and self.enc_slots and self.dec_slots:
            return np.concatenate(
                [softmax(self.fusion_logits[: self.enc_slots]), softmax(self.fusion_logits[self.enc_slots :])]
            )
        return softmax(self.fusion_logits)


def configure(
    mode: str,
    enc_layers: int,
    dec_layers: int,
    feature_dim: int,
    hidden: int = 256,
    depth: int = 2,
    dropout_p: float = 0.5,
    variant: str = "adapter",
    fusion_norm: str = "softmax",
    ln_eps: float = 1e-9,
    seed: int = 0,
) -> AdapterStack:
    """Build a seeded AdapterStack for the given mode and variant."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}, expected one of {MODES}")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    if fusion_norm not in FUSION_NORMS:
        raise ConfigError(f"unknown fusion_norm {fusion_norm!r}, expected one of {FUSION_NORMS}")
    use_enc = mode in ("encoder-only", "encoder+decoder")
    use_dec = mode in ("decoder-only", "encoder+decoder")
    if use_enc and enc_layers < 1:
        raise ConfigError(f"mode {mode!r} needs enc_layers >= 1, got {enc_layers}")
    if use_dec and dec_layers < 1:
        raise ConfigError(f"mode {mode!r} needs dec_layers >= 1, got {dec_layers}")
    if feature_dim < 1 or hidden < 1 or depth < 1:
        raise ConfigError(
            f"dims must be positive: feature_dim={feature_dim}, hidden={hidden}, depth={depth}"
        )

    def build_bank(side: str, expected: int) -> AdapterBank:
        bank_rng = rngmod.stream(seed, "init", side)
        if variant == "last":
            slots = 1
            shared = False
        elif variant == "mean":
            slots = expected
            shared = True
        else:
            slots = expected
            shared = False
        return init_adapter_bank(
            bank_rng, slots, feature_dim, hidden, depth, dropout_p, ln_eps, shared=shared
        )

    encoder_bank = build_bank("enc", enc_layers) if use_enc else None
    decoder_bank = build_bank("dec", dec_layers) if use_dec else None
    n_slots = (encoder_bank.num_layers if encoder_bank else 0) + (
        decoder_bank.num_layers if decoder_bank else 0
    )
    return AdapterStack(
        mode=mode,
        variant=variant,
        enc_layers=enc_layers if use_enc else 0,
        dec_layers=dec_layers if use_dec else 0,
        feature_dim=feature_dim,
        encoder_bank=encoder_bank,
        decoder_bank=decoder_bank,
        fusion_logits=np.zeros(n_slots),
        fusion_norm=fusion_norm,
    )


def init_classifier(adapter_out_dim: int, class_names: list[str], seed: int = 0) -> EmotionClassifierParams:
    clf_rng = rngmod.stream(seed, "init", "clf")
    return EmotionClassifierParams(
        fc=init_linear(clf_rng, adapter_out_dim, len(class_names)),
        class_names=list(class_names),
    )


def _side_input(rep: LayeredRepresentation, stack: AdapterStack, side: str) -> np.ndarray:
    """Stack the participating layers of one side into (slots, T, d)."""
    if side == "enc":
        layers, expected = rep.encoder_layers, stack.enc_layers
    else:
        layers, expected = rep.decoder_layers, stack.dec_layers
    if len(layers) != expected:
        raise ConfigError(
            f"{rep.utterance_id!r}: expected {expected} {side} layers, got {len(layers)}"
        )
    if layers[0].shape[1] != stack.feature_dim:
        raise ConfigError(
            f"{rep.utterance_id!r}: feature dim {layers[0].shape[1]} != configured "
            f"{stack.feature_dim}"
        )
    if stack.variant == "last":
        return np.asarray(layers[-1], dtype=np.float64)[None, :, :]
    return np.stack([np.asarray(h, dtype=np.float64) for h in layers])


def _adapted_and_caches(
    rep: LayeredRepresentation,
    stack: AdapterStack,
    mode: str,
    rng: np.random.Generator | None,
) -> tuple[np.ndarray, dict]:
    parts = []
    caches: dict = {}
    if stack.encoder_bank is not None:
        a_e, caches["enc"] = bank_forward(stack.encoder_bank, _side_input(rep, stack, "enc"), mode, rng)
        parts.append(a_e)
    if stack.decoder_bank is not None:
        a_d, caches["dec"] = bank_forward(stack.decoder_bank, _side_input(rep, stack, "dec"), mode, rng)
        parts.append(a_d)
    return np.concatenate(parts, axis=0), caches


def forward(
    rep: LayeredRepresentation,
    stack: AdapterStack,
    clf: EmotionClassifierParams,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Class probabilities for one utterance."""
    adapted, _ = _adapted_and_caches(rep, stack, mode, rng)
    fused, _ = fuse(adapted, stack.fusion_logits, stack.fusion_norm, stack.enc_slots)
    logits = clf.fc.weight @ fused + clf.fc.bias
    return softmax(logits)


def parameter_dict(stack: AdapterStack, clf: EmotionClassifierParams) -> dict[str, np.ndarray]:
    """Name -> live array for every parameter tensor (frozen ones included)."""
    out: dict[str, np.ndarray] = {}
    for side, bank in (("enc", stack.encoder_bank), ("dec", stack.decoder_bank)):
        if bank is None:
            continue
        for k, (fwd, bwd) in enumerate(bank.levels):
            for tag, d in (("f", fwd), ("b", bwd)):
                for f in type(d).FIELDS:
                    out[f"{side}.k{k}.{tag}.{f}"] = getattr(d, f)
        out[f"{side}.ln.gamma"] = bank.ln_gamma
        out[f"{side}.ln.beta"] = bank.ln_beta
    out["fusion.logits"] = stack.fusion_logits
    out["clf.weight"] = clf.fc.weight
    out["clf.bias"] = clf.fc.bias
    return out


def trainable_names(stack: AdapterStack, clf: EmotionClassifierParams) -> list[str]:
    names = list(parameter_dict(stack, clf))
    if stack.variant == "mean":
        names.remove("fusion.logits")  # frozen equal weights
    return names


def loss_and_grads(
    rep: LayeredRepresentation,
    label: int,
    stack: AdapterStack,
    clf: EmotionClassifierParams,
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Cross-entropy loss and gradients for every parameter tensor."""
    if not 0 <= label < len(clf.class_names):
        raise ConfigError(
            f"{rep.utterance_id!r}: label index {label} out of range for "
            f"{len(clf.class_names)} classes"
        )
    adapted, caches = _adapted_and_caches(rep, stack, mode, rng)
    fused, fuse_cache = fuse(adapted, stack.fusion_logits, stack.fusion_norm, stack.enc_slots)
    logits = clf.fc.weight @ fused + clf.fc.bias
    loss, dlogits = softmax_cross_entropy(logits, label)

    grads: dict[str, np.ndarray] = {
        "clf.weight": np.outer(dlogits, fused),
        "clf.bias": dlogits,
    }
    dfused = clf.fc.weight.T @ dlogits
    dadapted, grads["fusion.logits"] = fuse_backward(dfused, fuse_cache)

    offset = 0
    for side, bank in (("enc", stack.encoder_bank), ("dec", stack.decoder_bank)):
        if bank is None:
            continue
        n = bank.num_layers
        _, bank_grads = bank_backward(bank, dadapted[offset : offset + n], caches[side])
        for key, g in bank_grads.items():
            grads[f"{side}.{key}"] = g
        offset += n
    return loss, grads


def train_step(
    batch: list[tuple[LayeredRepresentation, int]],
    stack: AdapterStack,
    clf: EmotionClassifierParams,
    opt: AdamState,
    rng: np.random.Generator | None = None,
) -> float:
    """One Adam update from the mean loss over the batch; returns that loss.

    Utterances are processed individually in batch order (variable T, no
    padding); gradients are averaged in that fixed order.
    """
    if not batch:
        raise ValueError("train_step: empty batch")
    params = parameter_dict(stack, clf)
    names = trainable_names(stack, clf)
    acc = {name: np.zeros_like(params[name]) for name in names}
    total = 0.0
    for rep, label in batch:
        loss, grads = loss_and_grads(rep, label, stack, clf, mode="train", rng=rng)
        total += loss
        for name in names:
            acc[name] += grads[name]
    scale = 1.0 / len(batch)
    for name in names:
        acc[name] *= scale
    adam_step({n: params[n] for n in names}, acc, opt)
    return total / len(batch)
