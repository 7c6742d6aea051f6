"""LRF1: one utterance's per-layer hidden states in a single binary file.

Layout, all integers little-endian:

    magic  4 bytes  "LRF1"
    version u16     currently 1
    uid_len u32, then uid_len bytes of UTF-8 utterance id
    d      u32      feature dimension
    L_e    u32      encoder layer count
    L_d    u32      decoder layer count (0 for encoder-only files)
    L_e times:  m u32, then m*d float32 row-major
    L_d times:  n u32, then n*d float32 row-major
    crc    u32      CRC-32 (zlib) of every preceding byte

Matrices are float32 on disk and widened to float64 in memory, so
read(write(x)) is bitwise-exact once x is at 32-bit precision.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from nser.errors import (
    DimensionError,
    LrfCrcError,
    LrfFormatError,
    LrfMagicError,
    LrfTruncatedError,
    LrfVersionError,
)
from nser.model.representation import LayeredRepresentation

MAGIC = b"LRF1"
VERSION = 1

# Guard against absurd counts in a corrupt header before trying to allocate.
_MAX_LAYERS = 4096
_MAX_ROWS = 2**24
_MAX_DIM = 2**20


def lrf_bytes(rep: LayeredRepresentation) -> bytes:
    """Serialize without touching the filesystem."""
    uid = rep.utterance_id.encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<H", VERSION),
        struct.pack("<I", len(uid)),
        uid,
        struct.pack("<III", rep.d, rep.num_encoder_layers, rep.num_decoder_layers),
    ]
    for matrix in list(rep.encoder_layers) + list(rep.decoder_layers):
        parts.append(struct.pack("<I", matrix.shape[0]))
        parts.append(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def write_lrf(path: str | Path, rep: LayeredRepresentation) -> None:
    Path(path).write_bytes(lrf_bytes(rep))


class _Cursor:
    def __init__(self, raw: bytes, name: str):
        self.raw = raw
        self.name = name
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.raw):
            raise LrfTruncatedError(
                f"{self.name}: truncated while reading {what}: need {count} bytes, "
                f"{len(self.raw) - self.pos} remain",
                offset=self.pos,
            )
        chunk = self.raw[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def parse_lrf_bytes(raw: bytes, name: str = "<bytes>") -> LayeredRepresentation:
    cur = _Cursor(raw, name)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise LrfMagicError(f"{name}: bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    version = cur.u16("version")
    if version != VERSION:
        raise LrfVersionError(
            f"{name}: unsupported version {version}, expected {VERSION}", offset=4
        )
    uid_len = cur.u32("utterance id length")
    uid_offset = cur.pos
    uid_bytes = cur.take(uid_len, "utterance id")
    try:
        utterance_id = uid_bytes.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise LrfFormatError(
            f"{name}: utterance id is not valid UTF-8: {exc}", offset=uid_offset
        ) from None
    header_offset = cur.pos
    d = cur.u32("feature dimension")
    num_enc = cur.u32("encoder layer count")
    num_dec = cur.u32("decoder layer count")
    if not (1 <= d <= _MAX_DIM):
        raise LrfFormatError(
            f"{name}: feature dimension {d} out of range [1, {_MAX_DIM}]",
            offset=header_offset,
        )
    if num_enc < 1 or num_enc > _MAX_LAYERS or num_dec > _MAX_LAYERS:
        raise LrfFormatError(
            f"{name}: layer counts L_e={num_enc}, L_d={num_dec} out of range "
            f"(need 1 <= L_e and both <= {_MAX_LAYERS})",
            offset=header_offset + 4,
        )

    def read_side(count: int, side: str) -> list[np.ndarray]:
        layers = []
        for k in range(count):
            rows_offset = cur.pos
            rows = cur.u32(f"{side} layer {k} sequence length")
            if not (1 <= rows <= _MAX_ROWS):
                raise LrfFormatError(
                    f"{name}: {side} layer {k} sequence length {rows} out of range "
                    f"[1, {_MAX_ROWS}]",
                    offset=rows_offset,
                )
            payload = cur.take(rows * d * 4, f"{side} layer {k} data")
            matrix = np.frombuffer(payload, dtype="<f4").astype(np.float64)
            layers.append(matrix.reshape(rows, d))
        return layers

    encoder_layers = read_side(num_enc, "encoder")
    decoder_layers = read_side(num_dec, "decoder")
    crc_offset = cur.pos
    stored_crc = cur.u32("checksum")
    actual_crc = zlib.crc32(raw[:crc_offset])
    if stored_crc != actual_crc:
        raise LrfCrcError(
            f"{name}: CRC mismatch: stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x}",
            offset=crc_offset,
        )
    if cur.pos != len(raw):
        raise LrfFormatError(
            f"{name}: {len(raw) - cur.pos} trailing byte(s) after checksum",
            offset=cur.pos,
        )
    try:
        return LayeredRepresentation(
            utterance_id=utterance_id,
            encoder_layers=encoder_layers,
            decoder_layers=decoder_layers,
        )
    except DimensionError as exc:
        raise LrfFormatError(f"{name}: invalid representation: {exc}", offset=0) from None


def read_lrf(path: str | Path) -> LayeredRepresentation:
    return parse_lrf_bytes(Path(path).read_bytes(), name=str(path))
