"""Layered-representation interchange files and the synthetic corpus generator."""

from nser.reprio.lrf import lrf_bytes, parse_lrf_bytes, read_lrf, write_lrf
from nser.reprio.synthetic import SynthSpec, gen_synthetic

__all__ = [
    "lrf_bytes",
    "parse_lrf_bytes",
    "read_lrf",
    "write_lrf",
    "SynthSpec",
    "gen_synthetic",
]
