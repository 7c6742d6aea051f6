"""Classification and recognition metrics: UAR, F1, WER, confusion matrices.

Zero-support classes are hard errors everywhere: silently dropping a class
would make scores incomparable across folds.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from nser.errors import DataError, DimensionError

DEFAULT_PUNCTUATION = string.punctuation


@dataclass
class ConfusionMatrix:
    """Counts[i, j] = samples of true class i predicted as class j."""

    counts: np.ndarray
    class_names: list[str]

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise DimensionError(
                f"confusion matrix must be square, got shape {self.counts.shape}"
            )
        if len(self.class_names) != self.counts.shape[0]:
            raise DimensionError(
                f"{len(self.class_names)} class names for a "
                f"{self.counts.shape[0]}x{self.counts.shape[1]} matrix"
            )
        if not np.issubdtype(self.counts.dtype, np.integer):
            if not np.all(self.counts == np.round(self.counts)):
                raise DataError("confusion matrix counts must be integers")
            self.counts = self.counts.astype(np.int64)
        else:
            self.counts = self.counts.astype(np.int64)
        if np.any(self.counts < 0):
            raise DataError("confusion matrix counts must be nonnegative")

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def _require_full_support(self) -> None:
        empty = [
            name for name, total in zip(self.class_names, self.support()) if total == 0
        ]
        if empty:
            raise DataError(f"zero-support class(es): {', '.join(empty)}")

    @staticmethod
    def from_pairs(true_labels, pred_labels, class_names) -> "ConfusionMatrix":
        if len(true_labels) != len(pred_labels):
            raise DimensionError(
                f"{len(true_labels)} true labels vs {len(pred_labels)} predictions"
            )
        index = {name: i for i, name in enumerate(class_names)}
        counts = np.zeros((len(class_names), len(class_names)), dtype=np.int64)
        for true, pred in zip(true_labels, pred_labels):
            if true not in index:
                raise DataError(f"true label {true!r} not in class set {class_names}")
            if pred not in index:
                raise DataError(f"predicted label {pred!r} not in class set {class_names}")
            counts[index[true], index[pred]] += 1
        return ConfusionMatrix(counts, list(class_names))


def accuracy(cm: ConfusionMatrix) -> float:
    total = int(cm.counts.sum())
    if total == 0:
        raise DataError("empty confusion matrix")
    return float(np.trace(cm.counts) / total)


def uar(cm: ConfusionMatrix) -> float:
    """Unweighted average recall: mean over classes of diag/support."""
    cm._require_full_support()
    recalls = np.diag(cm.counts) / cm.support()
    return float(np.mean(recalls))


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    cm._require_full_support()
    diag = np.diag(cm.counts).astype(np.float64)
    support = cm.support().astype(np.float64)
    predicted = cm.counts.sum(axis=0).astype(np.float64)
    recall = diag / support
    precision = np.divide(
        diag, predicted, out=np.zeros_like(diag), where=predicted > 0
    )
    denom = precision + recall
    return np.divide(
        2.0 * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0
    )


def f1(cm: ConfusionMatrix, averaging: str = "weighted") -> float:
    scores = per_class_f1(cm)
    if averaging == "macro":
        return float(np.mean(scores))
    if averaging == "weighted":
        support = cm.support().astype(np.float64)
        return float(np.sum(scores * support) / np.sum(support))
    raise DataError(f"unknown F1 averaging {averaging!r}; expected macro or weighted")


def normalize_tokens(text: str, punctuation: str = DEFAULT_PUNCTUATION) -> tuple[str, ...]:
    """Lowercase, delete the punctuation characters, split on whitespace."""
    table = str.maketrans("", "", punctuation)
    return tuple(text.lower().translate(table).split())


def edit_distance(a, b) -> int:
    """Levenshtein distance with unit costs, iterative DP in O(|a|·|b|)."""
    a, b = list(a), list(b)
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,                      # deletion
                cur[j - 1] + 1,                   # insertion
                prev[j - 1] + (tok_a != tok_b),   # substitution / match
            )
        prev = cur
    return prev[len(b)]


def wer(ref, hyp) -> float:
    """(substitutions + deletions + insertions) / |ref|."""
    ref = list(ref)
    if len(ref) == 0:
        raise DataError("reference token sequence is empty; WER undefined")
    return edit_distance(ref, hyp) / len(ref)


def classification_report(cm: ConfusionMatrix) -> str:
    """Line-oriented metric<TAB>value block plus the confusion matrix.

    Ordering is fixed and values use repr round-trip formatting, so reports
    are stable for byte-wise diffing.
    """
    lines = [
        f"uar\t{uar(cm)!r}",
        f"f1_weighted\t{f1(cm, 'weighted')!r}",
        f"f1_macro\t{f1(cm, 'macro')!r}",
        f"accuracy\t{accuracy(cm)!r}",
        "# confusion matrix: rows = true class, columns = predicted",
        "confusion\tclass\t" + "\t".join(cm.class_names),
    ]
    for i, name in enumerate(cm.class_names):
        row = "\t".join(str(int(v)) for v in cm.counts[i])
        lines.append(f"confusion\t{name}\t{row}")
    return "\n".join(lines) + "\n"
