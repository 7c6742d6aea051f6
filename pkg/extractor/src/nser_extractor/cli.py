"""Command line front end: nser-extract {extract,verify}.

Exit codes: 0 success, 1 usage (bad flags, config/model contradiction),
2 data problems (unreadable inputs, per-file failures, violations).
Machine-readable results go to stdout, one tab-separated line each;
progress and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import sys

from nser_extractor.errors import DataError, UsageError


def _log(msg: str) -> None:
    print(f"[nser-extract] {msg}", file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    p = _Parser(prog="nser-extract", description="Dump per-layer speech model states to LRF1 files.")
    sub = p.add_subparsers(dest="command", metavar="command")

    ex = sub.add_parser("extract", parents=[], help="run the model over a wav manifest", description="Run the model over every wav in the manifest and write one .lrf per utterance plus manifest.tsv and transcripts.tsv.")
    ex.add_argument("--manifest", required=True, help="TSV: utterance_id, wav path, label")
    ex.add_argument("--model", required=True, help="model directory or hub id")
    ex.add_argument("--out", required=True, help="output directory")
    ex.add_argument("--layers-enc", required=True, type=int, help="expected encoder layer states")
    ex.add_argument("--layers-dec", required=True, type=int, help="expected decoder layer states")
    ex.add_argument("--device", default="cpu", help="torch device (default cpu)")
    ex.add_argument("--max-new-tokens", default=32, type=int, help="decoding budget (default 32)")

    ve = sub.add_parser("verify", help="check a directory of .lrf files", description="Parse every .lrf in a directory, check finiteness, and optionally check geometry.")
    ve.add_argument("--dir", required=True, help="directory of .lrf files")
    ve.add_argument("--dim", type=int, help="expected feature dimension")
    ve.add_argument("--layers-enc", type=int, help="expected encoder layer states")
    ve.add_argument("--layers-dec", type=int, help="expected decoder layer states")
    return p


def cmd_extract(args) -> int:
    from nser_extractor.extract import ExtractorConfig, extract
    from nser_extractor.manifest import load_manifest

    rows = load_manifest(args.manifest)
    config = ExtractorConfig(
        model=args.model,
        expect_enc_layers=args.layers_enc,
        expect_dec_layers=args.layers_dec,
        out_dir=args.out,
        device=args.device,
        max_new_tokens=args.max_new_tokens,
    )
    _log(f"extracting {len(rows)} utterances with {args.model}")
    report = extract(rows, config)
    for r in report.results:
        print(f"ok\t{r.utterance_id}\t{r.frames}\t{r.tokens}\t{r.transcript}")
    for uid, reason in report.failures:
        print(f"failed\t{uid}\t{reason}")
    _log(f"done: {len(report.results)} ok, {len(report.failures)} failed")
    return 2 if report.failures else 0


def cmd_verify(args) -> int:
    from nser_extractor.verify import verify_dir

    violations = verify_dir(
        args.dir, expect_d=args.dim, expect_enc=args.layers_enc, expect_dec=args.layers_dec
    )
    for v in violations:
        print(f"violation\t{v.file}\t{v.message}")
    _log(f"checked {args.dir}: {len(violations)} violations")
    return 2 if violations else 0


def main(argv=None) -> int:
    try:
        import transformers.utils.logging as hf_logging

        hf_logging.set_verbosity_error()
        hf_logging.disable_progress_bar()
    except Exception:
        pass
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help or _Parser.error
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "extract":
            return cmd_extract(args)
        return cmd_verify(args)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        return 1
    except DataError as exc:
        _log(f"data error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
