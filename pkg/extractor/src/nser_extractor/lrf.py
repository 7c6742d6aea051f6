"""LRF1 serialization, independent of the consumer's implementation.

Layout (all integers little-endian):

    magic   4 bytes  "LRF1"
    version u16      1
    uid     u32 byte length + UTF-8 bytes
    d       u32      feature dimension
    L_e     u32      encoder layer count
    L_d     u32      decoder layer count
    layers  per layer (encoder stack first, then decoder):
            u32 rows, then rows*d float32 row-major
    crc     u32      CRC-32 of every preceding byte
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from nser_extractor.errors import LrfError

MAGIC = b"LRF1"
VERSION = 1


def lrf_bytes(uid: str, encoder_layers: list[np.ndarray], decoder_layers: list[np.ndarray]) -> bytes:
    if not encoder_layers:
        raise ValueError("need at least one encoder layer")
    d = encoder_layers[0].shape[1]
    uid_bytes = uid.encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<H", VERSION),
        struct.pack("<I", len(uid_bytes)),
        uid_bytes,
        struct.pack("<III", d, len(encoder_layers), len(decoder_layers)),
    ]
    for h in list(encoder_layers) + list(decoder_layers):
        if h.ndim != 2 or h.shape[1] != d:
            raise ValueError(f"layer shape {h.shape} does not match d={d}")
        parts.append(struct.pack("<I", h.shape[0]))
        parts.append(np.ascontiguousarray(h, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def write_lrf_atomic(path: str | Path, uid: str, encoder_layers, decoder_layers) -> None:
    """Write-temp-then-rename so a crashed run never leaves a torn file."""
    path = Path(path)
    payload = lrf_bytes(uid, encoder_layers, decoder_layers)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Cursor:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.raw):
            raise LrfError(f"truncated while reading {what}", self.pos)
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def parse_lrf_bytes(raw: bytes) -> tuple[str, list[np.ndarray], list[np.ndarray]]:
    cur = _Cursor(raw)
    if cur.take(4, "magic") != MAGIC:
        raise LrfError("bad magic, not an LRF1 file", 0)
    version = cur.u16("version")
    if version != VERSION:
        raise LrfError(f"unsupported version {version} (expected {VERSION})", 4)
    uid_len = cur.u32("uid length")
    uid_raw = cur.take(uid_len, "uid")
    try:
        uid = uid_raw.decode("utf-8")
    except UnicodeDecodeError:
        raise LrfError("uid is not valid UTF-8", cur.pos - uid_len) from None
    header_at = cur.pos
    d = cur.u32("feature dim")
    l_e = cur.u32("encoder layer count")
    l_d = cur.u32("decoder layer count")
    if d < 1:
        raise LrfError("feature dim must be >= 1", header_at)
    if l_e < 1:
        raise LrfError("need at least one encoder layer", header_at + 4)

    def read_stack(count: int, side: str) -> list[np.ndarray]:
        out = []
        for i in range(count):
            rows_at = cur.pos
            rows = cur.u32(f"{side} layer {i} row count")
            if rows < 1:
                raise LrfError(f"{side} layer {i} has no rows", rows_at)
            data = cur.take(rows * d * 4, f"{side} layer {i} data")
            out.append(np.frombuffer(data, dtype="<f4").reshape(rows, d))
        return out

    enc = read_stack(l_e, "encoder")
    dec = read_stack(l_d, "decoder")
    crc_at = cur.pos
    stored = cur.u32("crc")
    computed = zlib.crc32(raw[:crc_at])
    if stored != computed:
        raise LrfError(
            f"crc mismatch: stored {stored:#010x}, computed {computed:#010x}", crc_at
        )
    if cur.pos != len(raw):
        raise LrfError(f"{len(raw) - cur.pos} trailing byte(s) after crc", cur.pos)
    for side, stack in (("encoder", enc), ("decoder", dec)):
        rows = stack[0].shape[0] if stack else 0
        for i, h in enumerate(stack):
            if h.shape[0] != rows:
                raise LrfError(
                    f"{side} layer {i} has {h.shape[0]} rows, layer 0 has {rows}", crc_at
                )
    return uid, enc, dec


def read_lrf(path: str | Path) -> tuple[str, list[np.ndarray], list[np.ndarray]]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise LrfError(f"cannot read {path}: {exc}", 0) from None
    return parse_lrf_bytes(raw)
