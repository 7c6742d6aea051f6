"""Experiment orchestration: manifests, configs, splits, training, checkpoints."""

from nser.harness.checkpoint import (
    Checkpoint,
    check_resume_config,
    load_checkpoint,
    resume_state,
    save_checkpoint,
)
from nser.harness.config import ExperimentConfig, parse_kv
from nser.harness.experiment import (
    CompareResult,
    Corpus,
    ExperimentResult,
    FoldResult,
    TrainState,
    compare_variants,
    evaluate,
    restore_best,
    run_experiment,
    thread_count,
    train_fold,
)
from nser.harness.manifest import Manifest, ManifestRow
from nser.harness.splits import held_out_dev, kfold_split

__all__ = [
    "Checkpoint",
    "check_resume_config",
    "load_checkpoint",
    "resume_state",
    "save_checkpoint",
    "ExperimentConfig",
    "parse_kv",
    "CompareResult",
    "Corpus",
    "ExperimentResult",
    "FoldResult",
    "TrainState",
    "compare_variants",
    "evaluate",
    "restore_best",
    "run_experiment",
    "thread_count",
    "train_fold",
    "Manifest",
    "ManifestRow",
    "held_out_dev",
    "kfold_split",
]
