"""K-fold partitioning: seeded shuffle, then contiguous chunks.

Stratified by label whenever every class has at least k members; otherwise a
plain shuffle-and-chunk over the pooled ids (logged by callers). Either way
each utterance lands in exactly one test fold.
"""

from __future__ import annotations

import math

from nser import rng as rngmod
from nser.errors import ConfigError, DataError
from nser.harness.manifest import Manifest


def kfold_split(
    manifest: Manifest, k: int, seed: int
) -> list[tuple[list[str], list[str]]]:
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if k > len(manifest):
        raise DataError(f"k={k} exceeds corpus size {len(manifest)}")

    by_label: dict[str, list[str]] = {}
    for row in manifest:
        by_label.setdefault(row.label, []).append(row.utterance_id)
    stratified = all(len(ids) >= k for ids in by_label.values())

    test_folds: list[list[str]] = [[] for _ in range(k)]
    if stratified:
        for label in sorted(by_label):
            ids = list(by_label[label])
            rngmod.stream(seed, "kfold", label).shuffle(ids)
            for fold, chunk in enumerate(_chunks(ids, k)):
                test_folds[fold].extend(chunk)
    else:
        ids = [row.utterance_id for row in manifest]
        rngmod.stream(seed, "kfold").shuffle(ids)
        test_folds = _chunks(ids, k)

    out = []
    for fold in range(k):
        test = set(test_folds[fold])
        train = [row.utterance_id for row in manifest if row.utterance_id not in test]
        out.append((train, list(test_folds[fold])))
    return out


def _chunks(ids: list[str], k: int) -> list[list[str]]:
    """Split into k contiguous chunks with sizes differing by at most one."""
    base, extra = divmod(len(ids), k)
    chunks = []
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        chunks.append(ids[start : start + size])
        start += size
    return chunks


def held_out_dev(
    train_ids: list[str],
    labels: dict[str, str],
    fraction: float,
    seed: int,
    fold: int,
) -> tuple[list[str], list[str]]:
    """Carve a stratified dev set out of a training id list.

    Takes ceil(fraction * n) per class (at least one), so every class present
    in train is present in dev. Returns (remaining_train, dev).
    """
    by_label: dict[str, list[str]] = {}
    for uid in train_ids:
        by_label.setdefault(labels[uid], []).append(uid)
    dev: set[str] = set()
    for label in sorted(by_label):
        ids = list(by_label[label])
        if len(ids) < 2:
            raise DataError(
                f"class {label!r} has only {len(ids)} training utterance(s); "
                f"cannot hold out a dev sample"
            )
        rngmod.stream(seed, "dev", fold, label).shuffle(ids)
        take = min(len(ids) - 1, max(1, math.ceil(len(ids) * fraction)))
        dev.update(ids[:take])
    remaining = [uid for uid in train_ids if uid not in dev]
    dev_ordered = [uid for uid in train_ids if uid in dev]
    return remaining, dev_ordered
