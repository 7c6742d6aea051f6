"""Run a pretrained speech model over wav files and dump layer states.

The model is treated as a black box that maps audio to token ids; what
this tool keeps is every encoder layer's hidden-state sequence over the
input frames and every decoder layer's hidden-state sequence over the
greedily generated token sequence. Greedy decoding makes the whole run
deterministic, and the decoder states are harvested by re-forwarding the
generated ids in one pass: with causal masking that reproduces exactly
the states the model had while generating.

Layer counts are whatever the model exposes: the post-embedding state
plus one state per transformer block. The config declares the expected
counts and the first utterance's forward pass must confirm them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nser_extractor.audio import read_wav_mono
from nser_extractor.errors import DataError, UsageError
from nser_extractor.lrf import write_lrf_atomic
from nser_extractor.manifest import WavRow

_CLEAN = str.maketrans({"\t": " ", "\n": " ", "\r": " "})


@dataclass
class ExtractorConfig:
    model: str  # hub id or local directory
    expect_enc_layers: int
    expect_dec_layers: int
    out_dir: str
    device: str = "cpu"
    max_new_tokens: int = 32

    def __post_init__(self):
        if self.expect_enc_layers < 1:
            raise UsageError(f"expect_enc_layers must be >= 1, got {self.expect_enc_layers}")
        if self.expect_dec_layers < 1:
            raise UsageError(f"expect_dec_layers must be >= 1, got {self.expect_dec_layers}")
        if self.max_new_tokens < 1:
            raise UsageError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")


@dataclass
class UtteranceResult:
    utterance_id: str
    lrf_name: str
    label: str
    frames: int
    tokens: int
    transcript: str


@dataclass
class ExtractionReport:
    results: list[UtteranceResult] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)  # (uid, reason)


class _Loaded:
    def __init__(self, config: ExtractorConfig):
        import torch
        from transformers import AutoFeatureExtractor, AutoModelForSpeechSeq2Seq

        try:
            self.model = AutoModelForSpeechSeq2Seq.from_pretrained(config.model)
        except Exception as exc:
            raise DataError(f"cannot load model {config.model!r}: {exc}") from None
        try:
            self.features = AutoFeatureExtractor.from_pretrained(config.model)
        except Exception as exc:
            raise DataError(
                f"cannot load feature extractor for {config.model!r}: {exc}"
            ) from None
        self.tokenizer = None
        try:
            from transformers import AutoTokenizer

            self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        except Exception:
            pass  # ids-as-text fallback below
        self.model.eval()
        self.model.to(torch.device(config.device))
        self.torch = torch
        gc = self.model.generation_config
        self.special_ids = {
            i for i in (gc.decoder_start_token_id, gc.eos_token_id, gc.pad_token_id)
            if i is not None
        }

    def transcript(self, ids: list[int]) -> str:
        if self.tokenizer is not None:
            return self.tokenizer.decode(ids, skip_special_tokens=True).strip()
        return " ".join(str(i) for i in ids if i not in self.special_ids)


def _check_layer_counts(config: ExtractorConfig, n_enc: int, n_dec: int) -> None:
    if n_enc != config.expect_enc_layers or n_dec != config.expect_dec_layers:
        raise UsageError(
            f"model exposes {n_enc} encoder / {n_dec} decoder layer states, "
            f"config declares {config.expect_enc_layers} / {config.expect_dec_layers}"
        )


def _extract_one(loaded: _Loaded, config: ExtractorConfig, row: WavRow):
    torch = loaded.torch
    samples, rate = read_wav_mono(row.path)
    expected_rate = loaded.features.sampling_rate
    if rate != expected_rate:
        raise DataError(f"{row.path}: sample rate {rate} != model rate {expected_rate}")
    feats = loaded.features(
        samples, sampling_rate=rate, return_tensors="pt"
    ).input_features.to(loaded.model.device)
    with torch.no_grad():
        gen = loaded.model.generate(
            feats, do_sample=False, num_beams=1, max_new_tokens=config.max_new_tokens
        )
        out = loaded.model(
            input_features=feats, decoder_input_ids=gen, output_hidden_states=True
        )
    enc = [h[0].cpu().numpy().astype(np.float32) for h in out.encoder_hidden_states]
    dec = [h[0].cpu().numpy().astype(np.float32) for h in out.decoder_hidden_states]
    _check_layer_counts(config, len(enc), len(dec))
    ids = gen[0].tolist()
    return enc, dec, loaded.transcript(ids), len(ids)


def extract(rows: list[WavRow], config: ExtractorConfig) -> ExtractionReport:
    """Emit one LRF1 per utterance plus manifest.tsv and transcripts.tsv.

    Per-utterance failures are recorded and the run continues; a layer
    count contradicting the config aborts immediately.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = _Loaded(config)
    report = ExtractionReport()
    for row in rows:
        try:
            enc, dec, transcript, n_tokens = _extract_one(loaded, config, row)
        except UsageError:
            raise  # config/model mismatch: not a per-file problem
        except Exception as exc:
            reason = str(exc) or type(exc).__name__
            report.failures.append((row.utterance_id, reason))
            continue
        name = f"{row.utterance_id}.lrf"
        write_lrf_atomic(out_dir / name, row.utterance_id, enc, dec)
        report.results.append(
            UtteranceResult(
                utterance_id=row.utterance_id,
                lrf_name=name,
                label=row.label,
                frames=enc[0].shape[0],
                tokens=n_tokens,
                transcript=transcript.translate(_CLEAN).strip(),
            )
        )

    manifest_lines = ["# columns: utterance_id\tpath\tlabel"]
    transcript_lines = ["# columns: utterance_id\ttranscript"]
    for r in report.results:
        manifest_lines.append(f"{r.utterance_id}\t{r.lrf_name}\t{r.label}")
        transcript_lines.append(f"{r.utterance_id}\t{r.transcript}")
    (out_dir / "manifest.tsv").write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    (out_dir / "transcripts.tsv").write_text(
        "\n".join(transcript_lines) + "\n", encoding="utf-8"
    )
    return report
