"""Training loop, evaluation, cross-validation, and variant comparison.

Determinism contract: every random draw comes from a named stream keyed by
(master seed, purpose, fold, epoch, ...), so a run is a pure function of
(config, data) and an interrupted run resumed from a checkpoint replays the
exact stream positions of the uninterrupted one.
"""

from __future__ import annotations

import math
import os
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from nser import rng as rngmod
from nser.errors import ConfigError, DataError, NumericFailure, UsageError
from nser.harness.config import ExperimentConfig
from nser.harness.manifest import Manifest
from nser.harness.splits import held_out_dev, kfold_split
from nser.metrics import ConfusionMatrix, accuracy, f1, uar
from nser.model.network import (
    AdapterStack,
    EmotionClassifierParams,
    configure,
    forward,
    init_classifier,
    parameter_dict,
    train_step,
)
from nser.model.representation import LayeredRepresentation
from nser.nn.adam import AdamState

RowView = namedtuple("RowView", ["utterance_id", "label"])


def thread_count() -> int:
    """Worker cap from NSER_THREADS; results never depend on the value."""
    raw = os.environ.get("NSER_THREADS", "").strip()
    if raw:
        try:
            n = int(raw, 10)
        except ValueError:
            raise UsageError(f"NSER_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise UsageError(f"NSER_THREADS must be >= 1, got {n}")
        return n
    return min(4, os.cpu_count() or 1)


@dataclass
class Corpus:
    """In-memory (representation, label) pairs in a fixed id order."""

    ids: list[str]
    items: dict[str, tuple[LayeredRepresentation, str]]
    snr_db: dict[str, float | None] = field(default_factory=dict)
    split_map: dict[str, str | None] = field(default_factory=dict)

    @staticmethod
    def from_manifest(manifest: Manifest) -> "Corpus":
        from nser.reprio.lrf import read_lrf

        ids, items, snr, splits = [], {}, {}, {}
        for row in manifest:
            try:
                rep = read_lrf(row.path)
            except DataError as exc:
                raise DataError(f"utterance {row.utterance_id!r}: {exc}") from None
            ids.append(row.utterance_id)
            items[row.utterance_id] = (rep, row.label)
            snr[row.utterance_id] = row.snr_db
            splits[row.utterance_id] = row.split
        if not ids:
            raise DataError("manifest has no rows")
        return Corpus(ids=ids, items=items, snr_db=snr, split_map=splits)

    @staticmethod
    def from_pairs(pairs, split_map: dict[str, str] | None = None) -> "Corpus":
        ids, items = [], {}
        for rep, label in pairs:
            if rep.utterance_id in items:
                raise DataError(f"duplicate utterance id {rep.utterance_id!r}")
            ids.append(rep.utterance_id)
            items[rep.utterance_id] = (rep, label)
        if not ids:
            raise DataError("empty corpus")
        return Corpus(
            ids=ids,
            items=items,
            snr_db={uid: None for uid in ids},
            split_map={uid: (split_map or {}).get(uid) for uid in ids},
        )

    def __len__(self) -> int:
        return len(self.ids)

    def rep(self, uid: str) -> LayeredRepresentation:
        return self.items[uid][0]

    def label(self, uid: str) -> str:
        return self.items[uid][1]

    def labels_map(self) -> dict[str, str]:
        return {uid: self.items[uid][1] for uid in self.ids}

    def class_names(self) -> list[str]:
        return sorted({label for _, label in self.items.values()})

    def row_view(self) -> list[RowView]:
        return [RowView(uid, self.items[uid][1]) for uid in self.ids]

    def subset(self, ids) -> "Corpus":
        return Corpus(
            ids=list(ids),
            items={uid: self.items[uid] for uid in ids},
            snr_db={uid: self.snr_db.get(uid) for uid in ids},
            split_map={uid: self.split_map.get(uid) for uid in ids},
        )


@dataclass
class TrainState:
    stack: AdapterStack
    clf: EmotionClassifierParams
    opt: AdamState
    fold: int
    class_names: list[str]
    epoch: int = 0                      # completed epochs
    best_dev_uar: float = -math.inf
    best_epoch: int = -1
    epochs_since_improve: int = 0
    best_params: dict | None = None
    history: list = field(default_factory=list)  # (epoch, train_loss, dev_uar)


def fold_seed(config: ExperimentConfig, fold: int) -> int:
    return int(rngmod.stream(config.seed, "fold", fold).integers(0, 2**63))


def init_state(config: ExperimentConfig, class_names: list[str], fold: int) -> TrainState:
    seed = fold_seed(config, fold)
    stack = configure(
        config.mode,
        enc_layers=config.enc_layers,
        dec_layers=config.dec_layers,
        feature_dim=config.feature_dim,
        hidden=config.hidden,
        depth=config.depth,
        dropout_p=config.dropout,
        variant=config.variant,
        fusion_norm=config.fusion_norm,
        ln_eps=config.ln_eps,
        seed=seed,
    )
    clf = init_classifier(stack.adapter_out_dim, class_names, seed=seed)
    opt = AdamState(lr=config.lr)
    return TrainState(stack=stack, clf=clf, opt=opt, fold=fold, class_names=class_names)


def predict(rep: LayeredRepresentation, stack, clf) -> str:
    probs = forward(rep, stack, clf)
    return clf.class_names[int(np.argmax(probs))]


def evaluate(corpus: Corpus, ids, stack, clf, class_names) -> ConfusionMatrix:
    """Confusion matrix over ids; parallel over utterances, order fixed."""
    workers = thread_count()
    task = lambda uid: predict(corpus.rep(uid), stack, clf)
    if workers == 1 or len(ids) <= 1:
        preds = [task(uid) for uid in ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            preds = list(pool.map(task, ids))
    true = [corpus.label(uid) for uid in ids]
    return ConfusionMatrix.from_pairs(true, preds, class_names)


def _batches(order: list[str], batch_size: int) -> list[list[str]]:
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def train_fold(
    config: ExperimentConfig,
    corpus: Corpus,
    train_ids: list[str],
    dev_ids: list[str],
    fold: int,
    state: TrainState | None = None,
) -> TrainState:
    """Run (or continue) one fold's training up to max_epochs / early stop.

    Does not restore best weights; call restore_best before test evaluation
    so a checkpoint taken mid-run can continue the live trajectory.
    """
    if state is None:
        class_names = list(config.classes) if config.classes else corpus.class_names()
        state = init_state(config, class_names, fold)
    label_index = {name: i for i, name in enumerate(state.class_names)}
    for uid in list(train_ids) + list(dev_ids):
        if corpus.label(uid) not in label_index:
            raise DataError(
                f"utterance {uid!r} has label {corpus.label(uid)!r} outside "
                f"class set {state.class_names}"
            )

    while state.epoch < config.max_epochs:
        if state.epochs_since_improve >= config.patience:
            break
        epoch = state.epoch + 1
        order = list(train_ids)
        rngmod.stream(config.seed, "shuffle", fold, epoch).shuffle(order)
        total_loss = 0.0
        seen = 0
        for bi, batch_ids in enumerate(_batches(order, config.batch_size)):
            batch = [
                (corpus.rep(uid), label_index[corpus.label(uid)]) for uid in batch_ids
            ]
            drop_rng = rngmod.stream(config.seed, "dropout", fold, epoch, bi)
            loss = train_step(batch, state.stack, state.clf, state.opt, rng=drop_rng)
            if not math.isfinite(loss):
                raise NumericFailure(
                    f"non-finite training loss {loss!r}", epoch=epoch, batch=bi
                )
            total_loss += loss * len(batch)
            seen += len(batch)
        train_loss = total_loss / seen
        dev_cm = evaluate(corpus, dev_ids, state.stack, state.clf, state.class_names)
        dev_uar = uar(dev_cm)
        state.epoch = epoch
        state.history.append((epoch, train_loss, dev_uar))
        if dev_uar > state.best_dev_uar:
            state.best_dev_uar = dev_uar
            state.best_epoch = epoch
            state.epochs_since_improve = 0
            state.best_params = {
                name: arr.copy()
                for name, arr in parameter_dict(state.stack, state.clf).items()
            }
        else:
            state.epochs_since_improve += 1
    return state


def restore_best(state: TrainState) -> None:
    if state.best_params is None:
        return
    for name, arr in parameter_dict(state.stack, state.clf).items():
        arr[...] = state.best_params[name]


_METRIC_FNS = {
    "uar": uar,
    "f1_weighted": lambda cm: f1(cm, "weighted"),
    "f1_macro": lambda cm: f1(cm, "macro"),
    "accuracy": accuracy,
}


@dataclass
class FoldResult:
    fold: int
    cm: ConfusionMatrix
    metrics: dict[str, float]
    trained_epochs: int
    best_epoch: int
    best_dev_uar: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    class_names: list[str]
    folds: list[FoldResult]
    aggregate: dict[str, float]
    final_state: TrainState

    def render(self) -> str:
        lines = [f"# classes: {','.join(self.class_names)}"]
        for fr in self.folds:
            lines.append(f"fold\t{fr.fold}")
            lines.append(
                f"# trained {fr.trained_epochs} epoch(s), "
                f"best dev uar {fr.best_dev_uar!r} at epoch {fr.best_epoch}"
            )
            for name in self.config.metrics:
                lines.append(f"{name}\t{fr.metrics[name]!r}")
            lines.append("# confusion matrix: rows = true class, columns = predicted")
            lines.append("confusion\tclass\t" + "\t".join(self.class_names))
            for i, cname in enumerate(self.class_names):
                row = "\t".join(str(int(v)) for v in fr.cm.counts[i])
                lines.append(f"confusion\t{cname}\t{row}")
        lines.append(f"aggregate\tfolds\t{len(self.folds)}")
        for name in self.config.metrics:
            lines.append(f"aggregate\t{name}_mean\t{self.aggregate[name + '_mean']!r}")
            lines.append(f"aggregate\t{name}_std\t{self.aggregate[name + '_std']!r}")
        return "\n".join(lines) + "\n"


def _fold_plan(
    config: ExperimentConfig, corpus: Corpus
) -> list[tuple[list[str], list[str], list[str]]]:
    """(train, dev, test) id lists per fold."""
    labels = corpus.labels_map()
    plans = []
    if config.cv == "kfold":
        folds = kfold_split(corpus.row_view(), config.k, config.seed)
        for fold, (train_ids, test_ids) in enumerate(folds):
            train_rest, dev_ids = held_out_dev(
                train_ids, labels, config.dev_fraction, config.seed, fold
            )
            plans.append((train_rest, dev_ids, test_ids))
    else:
        # Fixed split: the manifest rows carry train/dev/test assignments.
        by_split: dict[str, list[str]] = {"train": [], "dev": [], "test": []}
        missing = []
        for uid in corpus.ids:
            split = corpus.split_map.get(uid)
            if split is None:
                missing.append(uid)
            else:
                by_split[split].append(uid)
        if missing:
            raise DataError(
                f"fixed-split cv needs a split column on every row; "
                f"{len(missing)} row(s) lack one (first: {missing[0]!r})"
            )
        for name in ("train", "dev", "test"):
            if not by_split[name]:
                raise DataError(f"fixed-split cv: no rows with split={name}")
        plans.append((by_split["train"], by_split["dev"], by_split["test"]))
    for train_ids, dev_ids, test_ids in plans:
        train_set, dev_set, test_set = set(train_ids), set(dev_ids), set(test_ids)
        assert not (train_set & test_set), "train/test overlap"
        assert not (dev_set & test_set), "dev/test overlap"
        assert not (train_set & dev_set), "train/dev overlap"
    return plans


def run_experiment(config: ExperimentConfig, data) -> ExperimentResult:
    corpus = Corpus.from_manifest(data) if isinstance(data, Manifest) else data
    class_names = list(config.classes) if config.classes else corpus.class_names()
    if len(class_names) < 2:
        raise DataError(f"need at least 2 classes, got {class_names}")
    plans = _fold_plan(config, corpus)
    folds: list[FoldResult] = []
    state = None
    for fold, (train_ids, dev_ids, test_ids) in enumerate(plans):
        state = train_fold(config, corpus, train_ids, dev_ids, fold)
        restore_best(state)
        cm = evaluate(corpus, test_ids, state.stack, state.clf, class_names)
        metrics = {name: _METRIC_FNS[name](cm) for name in config.metrics}
        folds.append(
            FoldResult(
                fold=fold,
                cm=cm,
                metrics=metrics,
                trained_epochs=state.epoch,
                best_epoch=state.best_epoch,
                best_dev_uar=state.best_dev_uar,
            )
        )
    aggregate = {}
    for name in config.metrics:
        values = np.array([fr.metrics[name] for fr in folds])
        aggregate[name + "_mean"] = float(values.mean())
        aggregate[name + "_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return ExperimentResult(
        config=config,
        class_names=class_names,
        folds=folds,
        aggregate=aggregate,
        final_state=state,
    )


@dataclass
class CompareResult:
    conditions: list[str]
    rows: list[tuple[str, dict[str, dict[str, float]]]]
    # rows: (variant label, {condition: aggregate dict}), ranked

    def render(self) -> str:
        lines = []
        for label, per_cond in self.rows:
            for cond in self.conditions:
                for key in sorted(per_cond[cond]):
                    lines.append(f"compare\t{label}\t{cond}\t{key}\t{per_cond[cond][key]!r}")
        for metric in ("uar_mean", "f1_weighted_mean"):
            lines.append(f"# table {metric}; rows = variant, columns = condition")
            lines.append("table\tvariant\t" + "\t".join(self.conditions))
            for label, per_cond in self.rows:
                cells = "\t".join(
                    repr(per_cond[cond].get(metric, float("nan")))
                    for cond in self.conditions
                )
                lines.append(f"table\t{label}\t{cells}")
        return "\n".join(lines) + "\n"


def compare_variants(configs: list[ExperimentConfig], data) -> CompareResult:
    if not configs:
        raise ConfigError("compare_variants needs at least one config")
    seeds = {c.seed for c in configs}
    if len(seeds) != 1:
        raise ConfigError(f"configs must share one seed, got {sorted(seeds)}")
    corpus = Corpus.from_manifest(data) if isinstance(data, Manifest) else data
    resolved = [
        tuple(c.classes) if c.classes else tuple(corpus.class_names()) for c in configs
    ]
    if len(set(resolved)) != 1:
        raise ConfigError(f"mismatched class sets across configs: {sorted(set(resolved))}")

    snr_values = {corpus.snr_db.get(uid) for uid in corpus.ids}
    if None not in snr_values and len(snr_values) >= 1:
        grid = sorted(snr_values)
        conditions = [f"snr={val!r}" for val in grid]
        cond_ids = {
            f"snr={val!r}": [uid for uid in corpus.ids if corpus.snr_db[uid] == val]
            for val in grid
        }
    else:
        conditions = ["all"]
        cond_ids = {"all": list(corpus.ids)}

    rows = []
    for config in configs:
        per_cond = {}
        for cond in conditions:
            result = run_experiment(config, corpus.subset(cond_ids[cond]))
            per_cond[cond] = dict(result.aggregate)
        rows.append((config.variant, per_cond))
    rows.sort(
        key=lambda item: -float(
            np.mean([item[1][cond]["uar_mean"] for cond in conditions])
        )
    )
    return CompareResult(conditions=conditions, rows=rows)
