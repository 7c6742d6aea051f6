"""Minimal wav loading for model input."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from nser_extractor.errors import DataError


def read_wav_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """16-bit PCM mono wav -> (float samples in [-1, 1), sample rate)."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.getnframes()
            if channels != 1:
                raise DataError(f"{path}: expected mono, got {channels} channels")
            if width != 2:
                raise DataError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
            if frames < 1:
                raise DataError(f"{path}: no samples")
            pcm = wf.readframes(frames)
    except wave.Error as exc:
        raise DataError(f"{path}: not a readable wav file: {exc}") from None
    except EOFError:  # wave raises this bare on a short header
        raise DataError(f"{path}: truncated or not a wav file") from None
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from None
    samples = np.frombuffer(pcm, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate
