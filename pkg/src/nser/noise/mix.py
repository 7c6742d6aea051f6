"""Additive noise mixing at exact target signal-to-noise ratios.

The noise segment is scaled by

    g = sqrt(P_speech / (P_segment * 10**(snr_db / 10)))

where P_x is the mean of squared samples, so the achieved SNR equals the
requested one by construction.  Power is measured over the selected segment,
not the whole noise file.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from nser import rng as rngmod
from nser.errors import DataError
from nser.harness.manifest import Manifest, ManifestRow

_OFFSET_POLICIES = ("random-crop", "loop")
_CLIP_POLICIES = ("rescale", "saturate")


@dataclass
class Waveform:
    """Mono audio as float64 samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise DataError(f"waveform must be 1-D, got shape {self.samples.shape}")
        if self.samples.size == 0:
            raise DataError("waveform has no samples")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class MixSpec:
    snr_db: float
    seed: int = 0
    noise_offset_policy: str = "random-crop"
    clip_policy: str = "rescale"

    def __post_init__(self) -> None:
        if not math.isfinite(self.snr_db):
            raise DataError(f"snr_db must be finite, got {self.snr_db}")
        if self.noise_offset_policy not in _OFFSET_POLICIES:
            raise DataError(
                f"unknown noise offset policy {self.noise_offset_policy!r}; "
                f"expected one of {_OFFSET_POLICIES}"
            )
        if self.clip_policy not in _CLIP_POLICIES:
            raise DataError(
                f"unknown clip policy {self.clip_policy!r}; "
                f"expected one of {_CLIP_POLICIES}"
            )


@dataclass
class MixResult:
    noisy: Waveform
    applied_gain: float
    noise_offset: int
    peak: float
    clipped: bool


def rms_power(waveform: Waveform) -> float:
    """Mean of squared samples."""
    return float(np.mean(np.square(waveform.samples)))


def _select_segment(noise: np.ndarray, length: int, spec: MixSpec) -> tuple[np.ndarray, int]:
    if len(noise) >= length:
        slack = len(noise) - length
        if spec.noise_offset_policy == "random-crop" and slack > 0:
            offset = int(rngmod.stream(spec.seed, "crop").integers(0, slack + 1))
        else:
            offset = 0
        return noise[offset : offset + length], offset
    # Noise shorter than speech: tile from the start and truncate.  Every
    # noise sample is reused in order, so the segment is fully determined
    # by the lengths alone.
    reps = -(-length // len(noise))
    return np.tile(noise, reps)[:length], 0


def mix_at_snr(speech: Waveform, noise: Waveform, spec: MixSpec) -> tuple[Waveform, float]:
    """Mix noise into speech at spec.snr_db; returns (noisy, applied_gain)."""
    result = mix_at_snr_detailed(speech, noise, spec)
    return result.noisy, result.applied_gain


def mix_at_snr_detailed(speech: Waveform, noise: Waveform, spec: MixSpec) -> MixResult:
    if speech.sample_rate != noise.sample_rate:
        raise DataError(
            f"sample rate mismatch: speech {speech.sample_rate} Hz, "
            f"noise {noise.sample_rate} Hz"
        )
    p_speech = rms_power(speech)
    if p_speech == 0.0:
        raise DataError("speech has zero power; SNR is undefined")
    segment, offset = _select_segment(noise.samples, len(speech), spec)
    p_segment = float(np.mean(np.square(segment)))
    if p_segment == 0.0:
        raise DataError("selected noise segment has zero power; SNR is undefined")
    gain = math.sqrt(p_speech / (p_segment * 10.0 ** (spec.snr_db / 10.0)))
    mixed = speech.samples + gain * segment
    peak = float(np.max(np.abs(mixed)))
    clipped = peak > 1.0
    if clipped:
        if spec.clip_policy == "rescale":
            # Dividing speech and scaled noise by the same factor preserves
            # their power ratio, so the achieved SNR is unchanged.
            mixed = mixed / peak
        else:
            mixed = np.clip(mixed, -1.0, 1.0)
    noisy = Waveform(samples=mixed, sample_rate=speech.sample_rate)
    return MixResult(
        noisy=noisy,
        applied_gain=gain,
        noise_offset=offset,
        peak=peak,
        clipped=clipped,
    )


def _derive_seed(master_seed: int, utterance_id: str) -> int:
    return int(rngmod.stream(master_seed, "mix", utterance_id).integers(0, 2**63))


def build_noisy_manifest(
    clean_manifest: Manifest,
    noise_manifest: Manifest,
    spec: MixSpec,
    out_dir: str,
) -> Manifest:
    """Mix every clean utterance with a noise file at spec.snr_db.

    Writes one wav per utterance into out_dir plus manifest.tsv and a
    mix_audit.tsv sidecar recording gain, offset, measured SNR and clip
    events.  Everything is a pure function of the inputs and spec.seed:
    the noise file and crop offset for an utterance depend only on its id.
    """
    from nser.noise.wav import read_wav, write_wav

    if len(noise_manifest) == 0:
        raise DataError("noise manifest is empty")
    missing = [
        row.path
        for row in list(clean_manifest) + list(noise_manifest)
        if not os.path.isfile(row.path)
    ]
    if missing:
        raise DataError(
            f"{len(missing)} input file(s) missing: " + ", ".join(sorted(set(missing)))
        )

    os.makedirs(out_dir, exist_ok=True)
    noise_rows = list(noise_manifest)
    noise_cache: dict[str, Waveform] = {}
    out_rows: list[ManifestRow] = []
    audit_lines: list[str] = []

    for row in sorted(clean_manifest, key=lambda r: r.utterance_id):
        speech = read_wav(row.path)
        pick = int(
            rngmod.stream(spec.seed, "noise-choice", row.utterance_id).integers(
                0, len(noise_rows)
            )
        )
        noise_row = noise_rows[pick]
        if noise_row.path not in noise_cache:
            noise_cache[noise_row.path] = read_wav(noise_row.path)
        noise = noise_cache[noise_row.path]
        per_utt = MixSpec(
            snr_db=spec.snr_db,
            seed=_derive_seed(spec.seed, row.utterance_id),
            noise_offset_policy=spec.noise_offset_policy,
            clip_policy=spec.clip_policy,
        )
        result = mix_at_snr_detailed(speech, noise, per_utt)
        out_name = f"{row.utterance_id}.wav"
        write_wav(os.path.join(out_dir, out_name), result.noisy)
        out_rows.append(
            ManifestRow(
                utterance_id=row.utterance_id,
                path=out_name,
                label=row.label,
                transcript=row.transcript,
                fold=row.fold,
                snr_db=spec.snr_db,
                split=row.split,
            )
        )
        audit_lines.append(
            "\t".join(
                [
                    row.utterance_id,
                    noise_row.utterance_id,
                    str(result.noise_offset),
                    repr(result.applied_gain),
                    repr(spec.snr_db),
                    str(int(result.clipped)),
                    repr(result.peak),
                ]
            )
        )

    header = [
        f"snr_db = {spec.snr_db!r}",
        f"seed = {spec.seed}",
        f"noise_offset_policy = {spec.noise_offset_policy}",
        f"clip_policy = {spec.clip_policy}",
    ]
    Manifest(out_rows).save(os.path.join(out_dir, "manifest.tsv"), header_comments=header)
    audit_header = header + [
        "columns: id\tnoise_id\tnoise_offset\tapplied_gain\tsnr_db\tclipped\tpeak"
    ]
    with open(os.path.join(out_dir, "mix_audit.tsv"), "w", encoding="utf-8") as fh:
        for comment in audit_header:
            fh.write(f"# {comment}\n")
        fh.write("\n".join(audit_lines) + "\n")
    return Manifest.load(os.path.join(out_dir, "manifest.tsv"))
