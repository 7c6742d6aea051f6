"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Reports go to stdout; all logging (resolved config, master seed, progress)
goes to stderr so stdout stays machine-readable.
"""

from __future__ import annotations

import argparse
import sys

from nser.errors import (
    CheckpointError,
    ConfigError,
    DataError,
    NumericFailure,
    UsageError,
)


def _log(message: str) -> None:
    print(f"[nser] {message}", file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here is exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="nser",
        description="Noisy speech emotion recognition from layered ASR "
        "representations: mixing, synthetic corpora, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", metavar="<command>")
    sub.required = True

    p_mix = sub.add_parser(
        "mix",
        help="mix clean speech with noise at an exact SNR",
        description="Mix every utterance of a clean manifest with noise at "
        "the requested SNR; writes wavs, a manifest, and a gain audit.",
    )
    p_mix.add_argument("--clean", required=True, help="clean-speech manifest (TSV)")
    p_mix.add_argument("--noise", required=True, help="noise manifest (TSV)")
    p_mix.add_argument("--snr", required=True, type=float, help="target SNR in dB")
    p_mix.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p_mix.add_argument("--out", required=True, help="output directory")
    p_mix.add_argument(
        "--clip",
        choices=("rescale", "saturate"),
        default="rescale",
        help="overflow policy when the mix leaves [-1, 1] (default rescale)",
    )
    p_mix.set_defaults(func=cmd_mix)

    p_gen = sub.add_parser(
        "gen-synth",
        help="generate a synthetic layered-representation corpus",
        description="Write a deterministic synthetic corpus of LRF files "
        "plus a manifest.",
    )
    p_gen.add_argument("--classes", required=True, type=int, help="number of classes")
    p_gen.add_argument("--per-class", required=True, type=int, help="utterances per class")
    p_gen.add_argument("--layers-enc", required=True, type=int, help="encoder layer count")
    p_gen.add_argument("--layers-dec", required=True, type=int, help="decoder layer count")
    p_gen.add_argument("--dim", required=True, type=int, help="feature dimension")
    p_gen.add_argument("--sep", required=True, type=float, help="class separation >= 0")
    p_gen.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seq-min", type=int, default=4, help="min frames (default 4)")
    p_gen.add_argument("--seq-max", type=int, default=8, help="max frames (default 8)")
    p_gen.add_argument(
        "--noise-scale", type=float, default=1.0,
        help="stddev of the additive noise (default 1.0)",
    )
    p_gen.add_argument(
        "--layout", choices=("ramp", "split"), default="ramp",
        help="class-signal layout over layers (default ramp)",
    )
    p_gen.set_defaults(func=cmd_gen_synth)

    p_train = sub.add_parser(
        "train",
        help="train the adapter stack with cross-validation",
        description="Run the configured experiment on a manifest of LRF "
        "files; prints the per-fold and aggregate report and saves a "
        "checkpoint of the final fold.",
    )
    p_train.add_argument("--config", help="experiment config file (key = value)")
    p_train.add_argument("--manifest", required=True, help="corpus manifest (TSV)")
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument(
        "--resume", help="checkpoint to continue training from (fixed-split only)"
    )
    p_train.add_argument(
        "--max-epochs", type=int, default=None,
        help="override the epoch budget when resuming",
    )
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser(
        "eval",
        help="evaluate a checkpoint on a manifest",
        description="Load a checkpoint and score it on a manifest; uses the "
        "rows marked split=test when present, otherwise every row. Never "
        "updates parameters.",
    )
    p_eval.add_argument("--ckpt", required=True, help="checkpoint file")
    p_eval.add_argument("--manifest", required=True, help="corpus manifest (TSV)")
    p_eval.set_defaults(func=cmd_eval)

    p_wer = sub.add_parser(
        "wer",
        help="word error rate between two transcript files",
        description="Compare reference and hypothesis transcripts "
        "(id<TAB>text lines); prints per-id WER and the corpus WER "
        "(total edits / total reference tokens).",
    )
    p_wer.add_argument("--ref", required=True, help="reference transcripts")
    p_wer.add_argument("--hyp", required=True, help="hypothesis transcripts")
    p_wer.set_defaults(func=cmd_wer)

    p_cmp = sub.add_parser(
        "compare",
        help="train several variants and print a ranked table",
        description="Run each config on the same manifest and emit a ranked "
        "comparison; manifests carrying snr_db values get one column per SNR.",
    )
    p_cmp.add_argument(
        "--config", action="append", required=True,
        help="experiment config file; repeat once per variant",
    )
    p_cmp.add_argument("--manifest", required=True, help="corpus manifest (TSV)")
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def cmd_mix(args) -> int:
    import os

    from nser.harness.manifest import Manifest
    from nser.noise.mix import MixSpec, build_noisy_manifest

    spec = MixSpec(snr_db=args.snr, seed=args.seed, clip_policy=args.clip)
    _log(f"mix: snr_db={spec.snr_db!r} seed={spec.seed} clip={spec.clip_policy} "
         f"offset_policy={spec.noise_offset_policy}")
    clean = Manifest.load(args.clean)
    noise = Manifest.load(args.noise)
    _log(f"mix: {len(clean)} clean utterance(s), {len(noise)} noise file(s)")
    build_noisy_manifest(clean, noise, spec, args.out)
    with open(os.path.join(args.out, "mix_audit.tsv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    _log(f"mix: wrote {len(clean)} file(s) to {args.out}")
    return 0


def cmd_gen_synth(args) -> int:
    from nser.reprio.synthetic import SynthSpec, write_synthetic_corpus

    spec = SynthSpec(
        num_classes=args.classes,
        per_class=args.per_class,
        num_encoder_layers=args.layers_enc,
        num_decoder_layers=args.layers_dec,
        feature_dim=args.dim,
        seq_len_range=(args.seq_min, args.seq_max),
        class_separation=args.sep,
        seed=args.seed,
        noise_scale=args.noise_scale,
        signal_layout=args.layout,
    )
    _log(f"gen-synth: {spec}")
    manifest = write_synthetic_corpus(spec, args.out)
    print(f"files\t{len(manifest)}")
    print(f"manifest\t{args.out}/manifest.tsv")
    _log(f"gen-synth: wrote {len(manifest)} file(s) to {args.out}")
    return 0


def _log_config(config) -> None:
    _log(f"seed: {config.seed}")
    for line in config.serialize().rstrip("\n").split("\n"):
        _log(f"config: {line}")


def cmd_train(args) -> int:
    from nser.harness.checkpoint import (
        check_resume_config,
        load_checkpoint,
        resume_state,
        save_checkpoint,
    )
    from nser.harness.config import ExperimentConfig
    from nser.harness.experiment import (
        Corpus,
        _fold_plan,
        evaluate,
        restore_best,
        run_experiment,
        train_fold,
    )
    from nser.harness.manifest import Manifest
    from nser.metrics import classification_report

    if args.resume:
        if args.config:
            raise UsageError("--resume uses the checkpoint's config; drop --config")
        ckpt = load_checkpoint(args.resume)
        config = ckpt.config
        if args.max_epochs is not None:
            mapping = {
                key: value
                for key, value in (
                    line.split(" = ", 1) for line in config.serialize().splitlines()
                )
            }
            mapping["max_epochs"] = str(args.max_epochs)
            new_config = ExperimentConfig.from_mapping(mapping)
            check_resume_config(config, new_config)
            config = new_config
        if config.cv != "fixed-split":
            raise UsageError(
                "resume is only supported for cv = fixed-split runs "
                "(k-fold checkpoints capture a single fold)"
            )
        _log_config(config)
        corpus = Corpus.from_manifest(Manifest.load(args.manifest))
        (train_ids, dev_ids, test_ids) = _fold_plan(config, corpus)[0]
        state = resume_state(ckpt)
        _log(f"train: resuming at epoch {state.epoch}")
        state = train_fold(config, corpus, train_ids, dev_ids, fold=0, state=state)
        restore_best(state)
        cm = evaluate(corpus, test_ids, state.stack, state.clf, state.class_names)
        sys.stdout.write(classification_report(cm))
        save_checkpoint(args.out, state, config)
        _log(f"train: checkpoint written to {args.out}")
        return 0

    if not args.config:
        raise UsageError("train needs --config (or --resume)")
    if args.max_epochs is not None:
        raise UsageError("--max-epochs only applies with --resume; set it in the config")
    config = ExperimentConfig.from_file(args.config)
    _log_config(config)
    manifest = Manifest.load(args.manifest)
    result = run_experiment(config, manifest)
    sys.stdout.write(result.render())
    save_checkpoint(args.out, result.final_state, config)
    _log(f"train: checkpoint written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    from nser.harness.checkpoint import load_checkpoint, resume_state
    from nser.harness.experiment import Corpus, evaluate
    from nser.harness.manifest import Manifest
    from nser.metrics import classification_report

    ckpt = load_checkpoint(args.ckpt)
    _log_config(ckpt.config)
    state = resume_state(ckpt)
    corpus = Corpus.from_manifest(Manifest.load(args.manifest))
    test_ids = [uid for uid in corpus.ids if corpus.split_map.get(uid) == "test"]
    if test_ids:
        _log(f"eval: scoring {len(test_ids)} row(s) marked split=test")
    else:
        test_ids = list(corpus.ids)
        _log(f"eval: no split=test rows; scoring all {len(test_ids)} row(s)")
    cm = evaluate(corpus, test_ids, state.stack, state.clf, state.class_names)
    sys.stdout.write(classification_report(cm))
    return 0


def _read_transcripts(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                if "\t" not in line:
                    raise DataError(
                        f"{path} line {lineno}: expected 'id<TAB>text', got {line!r}"
                    )
                uid, _, text = line.partition("\t")
                if uid in out:
                    raise DataError(f"{path} line {lineno}: duplicate id {uid!r}")
                out[uid] = text
    except OSError as exc:
        raise DataError(f"cannot read transcripts {path}: {exc}") from None
    if not out:
        raise DataError(f"{path}: no transcript lines")
    return out


def cmd_wer(args) -> int:
    from nser.metrics import edit_distance, normalize_tokens, wer

    refs = _read_transcripts(args.ref)
    hyps = _read_transcripts(args.hyp)
    missing = [uid for uid in refs if uid not in hyps]
    extra = [uid for uid in hyps if uid not in refs]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing from hyp: {', '.join(sorted(missing))}")
        if extra:
            parts.append(f"missing from ref: {', '.join(sorted(extra))}")
        raise DataError(f"unmatched transcript ids: {'; '.join(parts)}")
    _log(f"wer: {len(refs)} utterance pair(s)")
    total_edits = 0
    total_ref = 0
    for uid in refs:
        ref_tokens = normalize_tokens(refs[uid])
        hyp_tokens = normalize_tokens(hyps[uid])
        rate = wer(ref_tokens, hyp_tokens)
        total_edits += edit_distance(ref_tokens, hyp_tokens)
        total_ref += len(ref_tokens)
        print(f"wer\t{uid}\t{rate!r}")
    print(f"corpus_wer\t{total_edits / total_ref!r}")
    return 0


def cmd_compare(args) -> int:
    from nser.harness.config import ExperimentConfig
    from nser.harness.experiment import compare_variants
    from nser.harness.manifest import Manifest

    configs = [ExperimentConfig.from_file(path) for path in args.config]
    for config in configs:
        _log_config(config)
    manifest = Manifest.load(args.manifest)
    result = compare_variants(configs, manifest)
    sys.stdout.write(result.render())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"error: {exc}")
        return 1
    except UsageError as exc:
        _log(f"error: {exc}")
        return 1
    except NumericFailure as exc:
        _log(f"error: {exc}")
        return 3
    except (CheckpointError, DataError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
