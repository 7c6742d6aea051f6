"""Offline ASR hidden-state extractor emitting LRF1 files."""

from nser_extractor.errors import ExtractorError, LrfError, UsageError
from nser_extractor.extract import ExtractorConfig, ExtractionReport, extract
from nser_extractor.lrf import lrf_bytes, read_lrf, write_lrf_atomic
from nser_extractor.verify import Violation, verify_dir

__all__ = [
    "ExtractionReport",
    "ExtractorConfig",
    "ExtractorError",
    "LrfError",
    "UsageError",
    "Violation",
    "extract",
    "lrf_bytes",
    "read_lrf",
    "verify_dir",
    "write_lrf_atomic",
]
