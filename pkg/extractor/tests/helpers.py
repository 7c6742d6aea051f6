"""Deterministic audio and path helpers shared by the test modules."""

import math
import struct
import wave
from pathlib import Path

import numpy as np

TINY_MODEL = str(Path(__file__).resolve().parent / "data" / "tiny-model")
GOLDEN_DIR = Path(__file__).resolve().parents[2] / "fixtures" / "golden"

RATE = 16000


def write_wav(path, samples, rate=RATE):
    ints = [max(-32768, min(32767, round(float(s) * 32768))) for s in samples]
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(struct.pack(f"<{len(ints)}h", *ints))


def sine(freq, seconds=0.5, rate=RATE, amp=0.3, phase=0.0):
    n = int(seconds * rate)
    return [amp * math.sin(2 * math.pi * freq * t / rate + phase) for t in range(n)]


def noise(seed, seconds=0.5, rate=RATE, amp=0.15):
    n = int(seconds * rate)
    return np.clip(np.random.default_rng(seed).standard_normal(n) * amp, -0.99, 0.99)
