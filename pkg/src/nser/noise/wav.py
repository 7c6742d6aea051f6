"""RIFF/WAVE PCM reader and writer, 16-bit mono only, byte-exact.

The parser walks chunks by hand so malformed input can be reported with the
byte offset of the problem. Float samples are pcm/32768 exactly; writing
quantizes with round-half-away-from-zero, so read(write(w)) reproduces
already-quantized samples bit for bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from nser.errors import WavFormatError

_PCM_FORMAT = 1  # WAVE_FORMAT_PCM


def read_wav(path: str | Path):
    from nser.noise.mix import Waveform  # circular-import dodge

    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise WavFormatError(f"{path}: file too short for a RIFF header", offset=len(raw))
    if raw[0:4] != b"RIFF":
        raise WavFormatError(f"{path}: missing RIFF tag", offset=0)
    declared = struct.unpack_from("<I", raw, 4)[0]
    if declared + 8 > len(raw):
        raise WavFormatError(
            f"{path}: RIFF size field claims {declared + 8} bytes, file has {len(raw)}", offset=4
        )
    if raw[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: missing WAVE tag", offset=8)

    sample_rate = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        chunk_size = struct.unpack_from("<I", raw, pos + 4)[0]
        body = pos + 8
        if body + chunk_size > len(raw):
            raise WavFormatError(
                f"{path}: chunk {chunk_id!r} declares {chunk_size} bytes but only "
                f"{len(raw) - body} remain",
                offset=pos + 4,
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise WavFormatError(f"{path}: fmt chunk too short ({chunk_size} bytes)", offset=pos + 4)
            fmt, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", raw, body)
            if fmt != _PCM_FORMAT:
                raise WavFormatError(f"{path}: unsupported codec {fmt}, only PCM", offset=body)
            if channels != 1:
                raise WavFormatError(f"{path}: {channels} channels, only mono supported", offset=body + 2)
            if bits != 16:
                raise WavFormatError(f"{path}: {bits}-bit samples, only 16-bit supported", offset=body + 14)
            sample_rate = rate
        elif chunk_id == b"data":
            data = raw[body : body + chunk_size]
            if chunk_size % 2 != 0:
                raise WavFormatError(f"{path}: odd data chunk size {chunk_size}", offset=pos + 4)
        pos = body + chunk_size + (chunk_size % 2)  # chunks are word-aligned

    if sample_rate is None:
        raise WavFormatError(f"{path}: no fmt chunk found", offset=len(raw))
    if data is None:
        raise WavFormatError(f"{path}: no data chunk found", offset=len(raw))
    if len(data) == 0:
        raise WavFormatError(f"{path}: data chunk has no samples", offset=len(raw))
    pcm = np.frombuffer(data, dtype="<i2").astype(np.float64)
    return Waveform(samples=pcm / 32768.0, sample_rate=sample_rate)


def _quantize(samples: np.ndarray) -> np.ndarray:
    scaled = np.asarray(samples, dtype=np.float64) * 32768.0
    # round half away from zero, then clamp to the int16 range
    q = np.where(scaled >= 0.0, np.floor(scaled + 0.5), np.ceil(scaled - 0.5))
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(path: str | Path, w) -> None:
    pcm = _quantize(w.samples)
    data = pcm.tobytes()
    byte_rate = w.sample_rate * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, _PCM_FORMAT, 1, w.sample_rate, byte_rate, 2, 16)
    header += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(header + data)
