"""Bridge test: files emitted here must train the downstream classifier.

This is the one place the two packages meet. Everything crosses through
the LRF1 files and the manifest TSV; no in-memory objects are shared.
Skipped when the downstream package is not installed.
"""

import pytest

nser_lrf = pytest.importorskip("nser.reprio.lrf")

import conftest
from helpers import TINY_MODEL, noise, sine, write_wav
from nser_extractor.extract import ExtractorConfig, extract
from nser_extractor.manifest import load_manifest


def record(name, ok, detail):
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


SPLITS = ("train", "train", "dev", "test")  # per class, by clip index


@pytest.fixture(scope="module")
def emitted(tmp_path_factory):
    root = tmp_path_factory.mktemp("bridge")
    wav_dir = root / "wavs"
    wav_dir.mkdir()
    lines = []
    for i in range(4):
        uid = f"calm-{i}"
        write_wav(wav_dir / f"{uid}.wav", sine(330 + 40 * i, amp=0.25, phase=0.3 * i))
        lines.append(f"{uid}\t{uid}.wav\tcalm")
    for i in range(4):
        uid = f"tense-{i}"
        write_wav(wav_dir / f"{uid}.wav", noise(100 + i))
        lines.append(f"{uid}\t{uid}.wav\ttense")
    (wav_dir / "wavs.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = root / "lrf"
    report = extract(
        load_manifest(wav_dir / "wavs.tsv"),
        ExtractorConfig(
            model=TINY_MODEL,
            expect_enc_layers=3,
            expect_dec_layers=3,
            out_dir=str(out),
            max_new_tokens=8,
        ),
    )
    assert report.failures == []
    assert len(report.results) == 8
    return out, report


def test_downstream_parser_reads_every_file(emitted):
    out, report = emitted
    for r in report.results:
        rep = nser_lrf.read_lrf(str(out / r.lrf_name))
        assert rep.utterance_id == r.utterance_id
        assert rep.d == 16
        assert rep.num_encoder_layers == 3
        assert rep.num_decoder_layers == 3
        assert rep.encoder_layers[0].shape == (100, 16)


def test_round_trip_trains_downstream_classifier(emitted):
    from nser.harness.config import ExperimentConfig
    from nser.harness.experiment import run_experiment
    from nser.harness.manifest import Manifest

    out, report = emitted
    # re-manifest with an explicit split column (7-column downstream format)
    lines = []
    per_class = {}
    for r in report.results:
        idx = per_class.get(r.label, 0)
        per_class[r.label] = idx + 1
        lines.append(f"{r.utterance_id}\t{r.lrf_name}\t{r.label}\t\t\t\t{SPLITS[idx]}")
    split_manifest = out / "split-manifest.tsv"
    split_manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")

    config = ExperimentConfig(
        enc_layers=3,
        dec_layers=3,
        feature_dim=16,
        hidden=4,
        adapter_out=8,
        depth=1,
        dropout=0.0,
        lr=1e-3,
        batch_size=4,
        max_epochs=2,
        patience=10,
        seed=0,
        cv="fixed-split",
    )
    result = run_experiment(config, Manifest.load(str(split_manifest)))
    uar = result.aggregate["uar_mean"]
    ok = len(result.folds) == 1 and 0.0 <= uar <= 1.0
    record(
        "cross-component-round-trip",
        ok,
        f"8 clips extracted, trained to uar={uar:.4f} without numeric failure",
    )
