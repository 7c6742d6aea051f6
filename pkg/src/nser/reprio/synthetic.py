"""Deterministic synthetic layered-representation corpora.

Each utterance is standard-normal noise (scaled by noise_scale) plus a class-
and layer-dependent mean added to every frame.  Class information lives in a
seeded random orthonormal subspace of the feature dimension.  Two layouts:

  ramp   one direction per class, planted on every layer of a side with
         strength (l+1)/L, so later layers carry proportionally stronger
         signal and the full mean magnitude equals class_separation at the
         final layer.
  split  classes are binary-coded onto orthogonal axes; the lowest-order
         axis is planted only on the final layer of each side, the
         remaining axes only on bands of earlier layers.  No single layer
         reveals the whole label, so selective per-layer weighting is
         required to recover it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from nser import rng as rngmod
from nser.errors import ConfigError
from nser.harness.manifest import Manifest, ManifestRow
from nser.model.representation import LayeredRepresentation

_LAYOUTS = ("ramp", "split")


@dataclass
class SynthSpec:
    num_classes: int
    per_class: int
    num_encoder_layers: int
    num_decoder_layers: int
    feature_dim: int
    seq_len_range: tuple[int, int]
    class_separation: float
    seed: int = 0
    noise_scale: float = 1.0
    signal_layout: str = "ramp"

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.per_class < 1:
            raise ConfigError(f"per_class must be >= 1, got {self.per_class}")
        if self.num_encoder_layers < 1:
            raise ConfigError(
                f"num_encoder_layers must be >= 1, got {self.num_encoder_layers}"
            )
        if self.num_decoder_layers < 0:
            raise ConfigError(
                f"num_decoder_layers must be >= 0, got {self.num_decoder_layers}"
            )
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        lo, hi = self.seq_len_range
        if not (1 <= lo <= hi):
            raise ConfigError(
                f"seq_len_range must satisfy 1 <= min <= max, got ({lo}, {hi})"
            )
        if self.class_separation < 0:
            raise ConfigError(
                f"class_separation must be >= 0, got {self.class_separation}"
            )
        if self.noise_scale < 0:
            raise ConfigError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.signal_layout not in _LAYOUTS:
            raise ConfigError(
                f"unknown signal_layout {self.signal_layout!r}; "
                f"expected one of {_LAYOUTS}"
            )
        if self.feature_dim < self._subspace_dim():
            raise ConfigError(
                f"feature_dim {self.feature_dim} too small for "
                f"{self._subspace_dim()} signal directions"
            )

    def _subspace_dim(self) -> int:
        if self.signal_layout == "ramp":
            return self.num_classes
        return max(1, math.ceil(math.log2(self.num_classes)))

    def class_names(self) -> list[str]:
        return [f"c{c}" for c in range(self.num_classes)]


def _orthonormal_directions(rng: np.random.Generator, d: int, count: int) -> np.ndarray:
    gauss = rng.standard_normal((d, count))
    q, r = np.linalg.qr(gauss)
    # Fix the sign convention so the basis is canonical for the draw.
    return q * np.sign(np.diag(r))


def _ramp_means(spec: SynthSpec, directions: np.ndarray, num_layers: int) -> np.ndarray:
    """(C, L, d) planted means: direction of the class, ramped over layers."""
    scales = (np.arange(num_layers) + 1.0) / num_layers
    per_class = directions.T  # (C, d)
    return spec.class_separation * np.einsum("l,cd->cld", scales, per_class)


def _split_means(spec: SynthSpec, directions: np.ndarray, num_layers: int) -> np.ndarray:
    """(C, L, d) planted means: one binary-code axis per layer band."""
    num_axes = spec._subspace_dim()
    signs = np.empty((spec.num_classes, num_axes))
    for c in range(spec.num_classes):
        for b in range(num_axes):
            signs[c, b] = 1.0 if (c >> b) & 1 else -1.0
    weights = np.zeros((num_axes, num_layers))
    weights[0, num_layers - 1] = 1.0
    earlier = num_layers - 1
    if num_axes > 1:
        if earlier == 0:
            # Degenerate single-layer side: everything lands on layer 0.
            weights[1:, 0] = 1.0
        else:
            bands = np.array_split(np.arange(earlier), num_axes - 1)
            for b, band in enumerate(bands, start=1):
                if len(band) == 0:
                    band = np.array([earlier - 1])
                weights[b, band] = 1.0
    # mean[c, l] = sep * sum_b signs[c,b] * weights[b,l] * u_b
    return spec.class_separation * np.einsum(
        "cb,bl,db->cld", signs, weights, directions
    )


def _planted_means(spec: SynthSpec, directions: np.ndarray, num_layers: int) -> np.ndarray:
    if num_layers == 0:
        return np.zeros((spec.num_classes, 0, spec.feature_dim))
    if spec.signal_layout == "ramp":
        return _ramp_means(spec, directions, num_layers)
    return _split_means(spec, directions, num_layers)


def signal_directions(spec: SynthSpec) -> np.ndarray:
    """The (d, r) orthonormal signal subspace the corpus plants means in."""
    rng = rngmod.stream(spec.seed, "synth", "directions")
    return _orthonormal_directions(rng, spec.feature_dim, spec._subspace_dim())


def planted_means(spec: SynthSpec, side: str) -> np.ndarray:
    """(C, L, d) means for one side ("encoder" or "decoder")."""
    if side not in ("encoder", "decoder"):
        raise ConfigError(f"side must be encoder or decoder, got {side!r}")
    count = (
        spec.num_encoder_layers if side == "encoder" else spec.num_decoder_layers
    )
    return _planted_means(spec, signal_directions(spec), count)


def gen_synthetic(spec: SynthSpec) -> list[tuple[LayeredRepresentation, str]]:
    """Generate the corpus; bitwise-deterministic per spec."""
    directions = signal_directions(spec)
    enc_means = _planted_means(spec, directions, spec.num_encoder_layers)
    dec_means = _planted_means(spec, directions, spec.num_decoder_layers)
    lo, hi = spec.seq_len_range
    out: list[tuple[LayeredRepresentation, str]] = []
    for c in range(spec.num_classes):
        label = f"c{c}"
        for i in range(spec.per_class):
            rng = rngmod.stream(spec.seed, "synth", "utt", c, i)
            m = int(rng.integers(lo, hi + 1))
            n = int(rng.integers(lo, hi + 1))
            encoder_layers = [
                spec.noise_scale * rng.standard_normal((m, spec.feature_dim))
                + enc_means[c, layer]
                for layer in range(spec.num_encoder_layers)
            ]
            decoder_layers = [
                spec.noise_scale * rng.standard_normal((n, spec.feature_dim))
                + dec_means[c, layer]
                for layer in range(spec.num_decoder_layers)
            ]
            rep = LayeredRepresentation(
                utterance_id=f"{label}-u{i:04d}",
                encoder_layers=encoder_layers,
                decoder_layers=decoder_layers,
            )
            out.append((rep, label))
    return out


def write_synthetic_corpus(spec: SynthSpec, out_dir: str) -> Manifest:
    """Write one .lrf per utterance plus manifest.tsv; returns the manifest."""
    from nser.reprio.lrf import write_lrf

    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for rep, label in gen_synthetic(spec):
        name = f"{rep.utterance_id}.lrf"
        write_lrf(os.path.join(out_dir, name), rep)
        rows.append(ManifestRow(utterance_id=rep.utterance_id, path=name, label=label))
    header = [
        f"num_classes = {spec.num_classes}",
        f"per_class = {spec.per_class}",
        f"layers = {spec.num_encoder_layers}+{spec.num_decoder_layers}",
        f"feature_dim = {spec.feature_dim}",
        f"seq_len_range = {spec.seq_len_range[0]}..{spec.seq_len_range[1]}",
        f"class_separation = {spec.class_separation!r}",
        f"noise_scale = {spec.noise_scale!r}",
        f"signal_layout = {spec.signal_layout}",
        f"seed = {spec.seed}",
    ]
    manifest_path = os.path.join(out_dir, "manifest.tsv")
    Manifest(rows).save(manifest_path, header_comments=header)
    return Manifest.load(manifest_path)
