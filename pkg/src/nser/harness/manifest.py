"""Tab-separated dataset manifests.

One row per utterance:

    id<TAB>path<TAB>label[<TAB>transcript][<TAB>fold][<TAB>snr_db][<TAB>split]

The first three fields are required; trailing optional fields may be omitted
or left empty.  Lines that are blank or start with ``#`` are ignored.  Paths
are resolved relative to the manifest file's directory at load time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from nser.errors import ManifestError

_SPLITS = ("train", "dev", "test")


@dataclass
class ManifestRow:
    utterance_id: str
    path: str
    label: str
    transcript: str | None = None
    fold: int | None = None
    snr_db: float | None = None
    split: str | None = None

    def validate(self) -> None:
        for name in ("utterance_id", "path", "label"):
            value = getattr(self, name)
            if not value:
                raise ManifestError(f"manifest row {self.utterance_id!r}: empty {name}")
            if "\t" in value or "\n" in value:
                raise ManifestError(
                    f"manifest row {self.utterance_id!r}: {name} contains a tab or newline"
                )
        if self.transcript is not None and "\t" in self.transcript:
            raise ManifestError(
                f"manifest row {self.utterance_id!r}: transcript contains a tab"
            )
        if self.fold is not None and self.fold < 0:
            raise ManifestError(
                f"manifest row {self.utterance_id!r}: fold must be >= 0, got {self.fold}"
            )
        if self.split is not None and self.split not in _SPLITS:
            raise ManifestError(
                f"manifest row {self.utterance_id!r}: split must be one of "
                f"{'/'.join(_SPLITS)}, got {self.split!r}"
            )


def _parse_row(line: str, lineno: int) -> ManifestRow:
    fields = line.split("\t")
    if len(fields) < 3:
        raise ManifestError(
            f"manifest line {lineno}: expected at least 3 tab-separated fields, "
            f"got {len(fields)}"
        )
    if len(fields) > 7:
        raise ManifestError(
            f"manifest line {lineno}: expected at most 7 tab-separated fields, "
            f"got {len(fields)}"
        )
    padded = fields + [""] * (7 - len(fields))
    uid, path, label, transcript, fold_s, snr_s, split = (f.strip() for f in padded)
    try:
        fold = int(fold_s) if fold_s else None
    except ValueError:
        raise ManifestError(
            f"manifest line {lineno}: fold must be an integer, got {fold_s!r}"
        ) from None
    try:
        snr_db = float(snr_s) if snr_s else None
    except ValueError:
        raise ManifestError(
            f"manifest line {lineno}: snr_db must be a number, got {snr_s!r}"
        ) from None
    row = ManifestRow(
        utterance_id=uid,
        path=path,
        label=label,
        transcript=transcript if transcript else None,
        fold=fold,
        snr_db=snr_db,
        split=split if split else None,
    )
    try:
        row.validate()
    except ManifestError as exc:
        raise ManifestError(f"manifest line {lineno}: {exc}") from None
    return row


@dataclass
class Manifest:
    rows: list[ManifestRow] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for row in self.rows:
            if row.utterance_id in seen:
                raise ManifestError(f"duplicate utterance id {row.utterance_id!r}")
            seen.add(row.utterance_id)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def labels(self) -> list[str]:
        return [row.label for row in self.rows]

    def class_names(self) -> list[str]:
        return sorted({row.label for row in self.rows})

    def subset(self, indices) -> "Manifest":
        return Manifest([self.rows[i] for i in indices])

    def check_labels(self, class_names) -> None:
        allowed = set(class_names)
        bad = sorted({row.label for row in self.rows} - allowed)
        if bad:
            raise ManifestError(
                f"labels not in configured class set {sorted(allowed)}: {bad}"
            )

    def check_files(self) -> None:
        missing = [row.path for row in self.rows if not os.path.isfile(row.path)]
        if missing:
            listing = ", ".join(missing[:20])
            suffix = "" if len(missing) <= 20 else f" (and {len(missing) - 20} more)"
            raise ManifestError(
                f"{len(missing)} referenced file(s) missing: {listing}{suffix}"
            )

    @staticmethod
    def parse(text: str, base_dir: str | None = None) -> "Manifest":
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            row = _parse_row(line.rstrip("\n"), lineno)
            if base_dir is not None and not os.path.isabs(row.path):
                row = replace(row, path=os.path.normpath(os.path.join(base_dir, row.path)))
            rows.append(row)
        return Manifest(rows)

    @staticmethod
    def load(path: str, check_files: bool = True) -> "Manifest":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from None
        manifest = Manifest.parse(text, base_dir=os.path.dirname(os.path.abspath(path)))
        if check_files:
            manifest.check_files()
        return manifest

    def serialize(self, header_comments: list[str] | None = None) -> str:
        lines = [f"# {comment}" for comment in (header_comments or [])]
        for row in self.rows:
            fields = [
                row.utterance_id,
                row.path,
                row.label,
                row.transcript if row.transcript is not None else "",
                str(row.fold) if row.fold is not None else "",
                repr(row.snr_db) if row.snr_db is not None else "",
                row.split if row.split is not None else "",
            ]
            while len(fields) > 3 and fields[-1] == "":
                fields.pop()
            lines.append("\t".join(fields))
        return "\n".join(lines) + "\n"

    def save(self, path: str, header_comments: list[str] | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.serialize(header_comments))
