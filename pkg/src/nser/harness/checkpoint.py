"""Binary training checkpoints ("NSK1"), bitwise-lossless.

Layout, little-endian throughout:

    magic   4 bytes "NSK1"
    version u16, currently 1
    config  u32 length + canonical `key = value` text (UTF-8)
    classes u32 count, each u32 length + UTF-8 name
    fold    u32
    epoch   u32          completed epochs
    best_epoch    i32    -1 when no epoch has finished yet
    since_improve u32
    adam_step     u64
    best_dev_uar  f64
    tensors u32 count; each: u32 name length + UTF-8 name, u8 ndim,
            ndim x u32 shape, float64 data
    crc     u32 CRC-32 of all preceding bytes

Tensor names: param.* (live weights), best.* (best-dev snapshot),
adam.m.* / adam.v.* (optimizer moments). Resume rebuilds the model from the
embedded config, overwrites arrays from param.*, and continues the named
seed streams from the stored epoch, which reproduces an uninterrupted run
bit for bit.
"""

from __future__ import annotations

import math
import os
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from nser.errors import CheckpointError, ConfigError
from nser.harness.config import ExperimentConfig
from nser.harness.experiment import TrainState, init_state
from nser.model.network import parameter_dict
from nser.nn.adam import AdamState

MAGIC = b"NSK1"
VERSION = 1

# Config fields that must match between a checkpoint and the config used to
# resume it; the budget fields (max_epochs, patience) may legitimately grow.
_RESUME_CRITICAL = (
    "enc_layers", "dec_layers", "feature_dim", "mode", "variant", "hidden",
    "adapter_out", "depth", "dropout", "fusion_norm", "lr", "batch_size",
    "seed", "cv", "k", "dev_fraction", "classes", "ln_eps",
)


@dataclass
class Checkpoint:
    config: ExperimentConfig
    class_names: list[str]
    fold: int
    epoch: int
    best_epoch: int
    epochs_since_improve: int
    adam_step: int
    best_dev_uar: float
    tensors: dict[str, np.ndarray]


def _collect_tensors(state: TrainState) -> dict[str, np.ndarray]:
    tensors: dict[str, np.ndarray] = {}
    for name, arr in parameter_dict(state.stack, state.clf).items():
        tensors[f"param.{name}"] = arr
    if state.best_params is not None:
        for name, arr in state.best_params.items():
            tensors[f"best.{name}"] = arr
    for name, arr in state.opt.m.items():
        tensors[f"adam.m.{name}"] = arr
    for name, arr in state.opt.v.items():
        tensors[f"adam.v.{name}"] = arr
    return tensors


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_checkpoint(path: str, state: TrainState, config: ExperimentConfig) -> None:
    parts = [MAGIC, struct.pack("<H", VERSION)]
    parts.append(_pack_str(config.serialize()))
    parts.append(struct.pack("<I", len(state.class_names)))
    for name in state.class_names:
        parts.append(_pack_str(name))
    parts.append(
        struct.pack(
            "<IIiIQd",
            state.fold,
            state.epoch,
            state.best_epoch,
            state.epochs_since_improve,
            state.opt.step,
            state.best_dev_uar,
        )
    )
    tensors = _collect_tensors(state)
    parts.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        parts.append(_pack_str(name))
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    body = b"".join(parts)
    blob = body + struct.pack("<I", zlib.crc32(body))
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, raw: bytes, name: str):
        self.raw = raw
        self.name = name
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.raw):
            raise CheckpointError(
                f"{self.name}: truncated while reading {what} at byte {self.pos}"
            )
        chunk = self.raw[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def string(self, what: str) -> str:
        (length,) = self.unpack("<I", f"{what} length")
        return self.take(length, what).decode("utf-8")


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    if len(raw) < 4:
        raise CheckpointError(f"{path}: too short to be a checkpoint")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    actual = zlib.crc32(raw[:-4])
    if stored_crc != actual:
        raise CheckpointError(
            f"{path}: CRC mismatch: stored {stored_crc:#010x}, computed {actual:#010x}"
        )
    reader = _Reader(raw[:-4], str(path))
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = reader.unpack("<H", "version")
    if version != VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version} (expected {VERSION})"
        )
    config = ExperimentConfig.parse(reader.string("config"))
    (class_count,) = reader.unpack("<I", "class count")
    class_names = [reader.string(f"class name {i}") for i in range(class_count)]
    fold, epoch, best_epoch, since, step, best_uar = reader.unpack(
        "<IIiIQd", "state header"
    )
    (tensor_count,) = reader.unpack("<I", "tensor count")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(tensor_count):
        name = reader.string("tensor name")
        (ndim,) = reader.unpack("<B", f"tensor {name} ndim")
        shape = reader.unpack(f"<{ndim}I", f"tensor {name} shape")
        size = int(np.prod(shape)) if ndim else 1
        payload = reader.take(size * 8, f"tensor {name} data")
        tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    if reader.pos != len(reader.raw):
        raise CheckpointError(
            f"{path}: {len(reader.raw) - reader.pos} trailing byte(s) before checksum"
        )
    return Checkpoint(
        config=config,
        class_names=class_names,
        fold=fold,
        epoch=epoch,
        best_epoch=best_epoch,
        epochs_since_improve=since,
        adam_step=step,
        best_dev_uar=best_uar,
        tensors=tensors,
    )


def check_resume_config(ckpt_config: ExperimentConfig, config: ExperimentConfig) -> None:
    for name in _RESUME_CRITICAL:
        if getattr(ckpt_config, name) != getattr(config, name):
            raise ConfigError(
                f"config key {name!r} differs from checkpoint: "
                f"{getattr(config, name)!r} vs {getattr(ckpt_config, name)!r}"
            )


def resume_state(ckpt: Checkpoint) -> TrainState:
    """Rebuild a live TrainState from a checkpoint."""
    state = init_state(ckpt.config, list(ckpt.class_names), ckpt.fold)
    params = parameter_dict(state.stack, state.clf)
    for name, arr in params.items():
        key = f"param.{name}"
        if key not in ckpt.tensors:
            raise CheckpointError(f"checkpoint is missing tensor {key!r}")
        stored = ckpt.tensors[key]
        if stored.shape != arr.shape:
            raise CheckpointError(
                f"tensor {key!r} has shape {stored.shape}, model expects {arr.shape}"
            )
        arr[...] = stored
    best = {
        name[len("best."):]: arr.copy()
        for name, arr in ckpt.tensors.items()
        if name.startswith("best.")
    }
    moments_m = {
        name[len("adam.m."):]: arr.copy()
        for name, arr in ckpt.tensors.items()
        if name.startswith("adam.m.")
    }
    moments_v = {
        name[len("adam.v."):]: arr.copy()
        for name, arr in ckpt.tensors.items()
        if name.startswith("adam.v.")
    }
    state.opt = AdamState(lr=ckpt.config.lr, step=ckpt.adam_step, m=moments_m, v=moments_v)
    state.epoch = ckpt.epoch
    state.best_epoch = ckpt.best_epoch
    state.epochs_since_improve = ckpt.epochs_since_improve
    state.best_dev_uar = ckpt.best_dev_uar
    state.best_params = best if best else None
    if not math.isfinite(state.best_dev_uar) and state.best_epoch >= 0:
        raise CheckpointError("checkpoint has a best epoch but no finite best dev UAR")
    return state
