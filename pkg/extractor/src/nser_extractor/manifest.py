"""The wav-manifest subset this tool consumes.

Tab-separated rows `utterance_id<TAB>path<TAB>label[<TAB>...]`; extra
columns pass through untouched. Relative paths resolve against the
manifest's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from nser_extractor.errors import DataError


@dataclass
class WavRow:
    utterance_id: str
    path: str
    label: str


def load_manifest(path: str | Path) -> list[WavRow]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None
    base = path.parent
    rows: list[WavRow] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise DataError(
                f"{path} line {lineno}: expected at least 3 tab-separated "
                f"fields (id, path, label), got {len(fields)}"
            )
        uid, wav_path, label = fields[0], fields[1], fields[2]
        if not uid or not wav_path or not label:
            raise DataError(f"{path} line {lineno}: empty id, path, or label")
        if uid in seen:
            raise DataError(f"{path} line {lineno}: duplicate utterance id {uid!r}")
        seen.add(uid)
        if not os.path.isabs(wav_path):
            wav_path = str(base / wav_path)
        rows.append(WavRow(uid, wav_path, label))
    if not rows:
        raise DataError(f"{path}: no rows")
    return rows
