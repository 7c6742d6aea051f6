"""QA pass over a directory of emitted layer-state files.

Verification is stricter than what downstream consumers require: every
file must parse, every value must be finite, and when expectations are
given the geometry must match them. A clean report means the directory
can be shipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from nser_extractor.errors import DataError, LrfError
from nser_extractor.lrf import read_lrf


@dataclass
class Violation:
    file: str
    message: str


def _check_file(path: Path, expect_d, expect_enc, expect_dec) -> list[Violation]:
    name = path.name
    try:
        uid, enc, dec = read_lrf(path)
    except LrfError as exc:
        return [Violation(name, str(exc))]
    except DataError as exc:
        return [Violation(name, str(exc))]
    out = []
    d = enc[0].shape[1]
    if path.stem != uid:
        out.append(Violation(name, f"uid {uid!r} does not match file name"))
    if expect_d is not None and d != expect_d:
        out.append(Violation(name, f"feature dim {d}, expected {expect_d}"))
    if expect_enc is not None and len(enc) != expect_enc:
        out.append(Violation(name, f"{len(enc)} encoder layers, expected {expect_enc}"))
    if expect_dec is not None and len(dec) != expect_dec:
        out.append(Violation(name, f"{len(dec)} decoder layers, expected {expect_dec}"))
    for side, layers in (("encoder", enc), ("decoder", dec)):
        for i, layer in enumerate(layers):
            if not np.isfinite(layer).all():
                out.append(Violation(name, f"non-finite values in {side} layer {i}"))
    return out


def verify_dir(
    path: str | Path,
    expect_d: int | None = None,
    expect_enc: int | None = None,
    expect_dec: int | None = None,
) -> list[Violation]:
    """Check every *.lrf under path; returns violations, empty when clean."""
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    files = sorted(root.glob("*.lrf"))
    if not files:
        raise DataError(f"no .lrf files under {root}")
    out = []
    for f in files:
        out.extend(_check_file(f, expect_d, expect_enc, expect_dec))
    return out
