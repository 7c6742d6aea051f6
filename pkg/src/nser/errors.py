"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: UsageError -> 1,
DataError -> 2, NumericFailure -> 3.
"""

from __future__ import annotations


class NserError(Exception):
    """Base class for all package errors."""


class UsageError(NserError):
    """Bad invocation: unknown flags, unknown config keys, invalid counts."""


class ConfigError(UsageError):
    """Invalid or inconsistent experiment configuration."""


class DimensionError(NserError, ValueError):
    """Shape mismatch between arrays; message names both shapes."""


class DataError(NserError):
    """Missing or malformed input data (files, manifests, formats)."""


class FormatError(DataError):
    """Malformed binary file. `offset` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class WavFormatError(FormatError):
    pass


class LrfFormatError(FormatError):
    pass


class LrfMagicError(LrfFormatError):
    pass


class LrfVersionError(LrfFormatError):
    pass


class LrfTruncatedError(LrfFormatError):
    pass


class LrfCrcError(LrfFormatError):
    pass


class CheckpointError(DataError):
    """Malformed or incompatible checkpoint file."""


class ManifestError(DataError):
    pass


class NumericFailure(NserError):
    """Loss or parameters became non-finite during training."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None):
        where = []
        if epoch is not None:
            where.append(f"epoch {epoch}")
        if batch is not None:
            where.append(f"batch {batch}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.epoch = epoch
        self.batch = batch


def require_shape(name: str, actual: tuple[int, ...], expected: tuple[int, ...]) -> None:
    """Raise DimensionError naming both shapes unless they match."""
    if tuple(actual) != tuple(expected):
        raise DimensionError(f"{name}: expected shape {tuple(expected)}, got {tuple(actual)}")
