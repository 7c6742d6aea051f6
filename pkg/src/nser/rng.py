"""Deterministic named random streams.

One master seed fans out into independent streams addressed by a path of
names and integers, e.g. stream(seed, "dropout", fold, epoch, item). The
derivation is pure (no global state), so any component can re-derive its
stream from coordinates alone; resuming a run at an epoch boundary needs
nothing beyond the epoch number.
"""

from __future__ import annotations

import zlib

import numpy as np


def _token(part: object) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    # crc32 is stable across platforms and Python versions
    return zlib.crc32(str(part).encode("utf-8"))


def stream(master_seed: int, *path: object) -> np.random.Generator:
    """Return a Generator for the (master_seed, *path) coordinate."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [_token(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
