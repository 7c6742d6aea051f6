"""Manifest and wav ingestion edge cases."""

import struct
import wave

import numpy as np
import pytest

from helpers import sine, write_wav
from nser_extractor.audio import read_wav_mono
from nser_extractor.errors import DataError
from nser_extractor.manifest import load_manifest


def test_manifest_resolves_relative_paths(tmp_path):
    write_wav(tmp_path / "a.wav", sine(440, seconds=0.1))
    (tmp_path / "m.tsv").write_text(
        "# comment line\n\nu1\ta.wav\thappy\n", encoding="utf-8"
    )
    rows = load_manifest(tmp_path / "m.tsv")
    assert len(rows) == 1
    assert rows[0].utterance_id == "u1"
    assert rows[0].label == "happy"
    assert rows[0].path == str(tmp_path / "a.wav")


def test_manifest_rejects_duplicates_and_short_rows(tmp_path):
    p = tmp_path / "m.tsv"
    p.write_text("u1\ta.wav\thappy\nu1\tb.wav\tsad\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 2.*duplicate"):
        load_manifest(p)
    p.write_text("u1\ta.wav\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 1"):
        load_manifest(p)
    p.write_text("u1\t\thappy\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 1.*empty"):
        load_manifest(p)


def test_manifest_requires_rows(tmp_path):
    p = tmp_path / "m.tsv"
    p.write_text("# only comments\n", encoding="utf-8")
    with pytest.raises(DataError, match="no rows"):
        load_manifest(p)
    with pytest.raises(DataError, match="cannot read"):
        load_manifest(tmp_path / "missing.tsv")


def test_wav_round_trip(tmp_path):
    path = tmp_path / "t.wav"
    write_wav(path, sine(440, seconds=0.25), rate=16000)
    samples, rate = read_wav_mono(path)
    assert rate == 16000
    assert len(samples) == 4000
    assert float(np.abs(samples).max()) <= 0.301  # amp 0.3 plus quantization


def test_wav_rejections(tmp_path):
    stereo = tmp_path / "s.wav"
    with wave.open(str(stereo), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(struct.pack("<4h", 0, 0, 0, 0))
    with pytest.raises(DataError, match="mono"):
        read_wav_mono(stereo)

    wide = tmp_path / "w.wav"
    with wave.open(str(wide), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(4)
        w.setframerate(16000)
        w.writeframes(struct.pack("<2i", 0, 0))
    with pytest.raises(DataError, match="16-bit"):
        read_wav_mono(wide)

    empty = tmp_path / "e.wav"
    with wave.open(str(empty), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(16000)
    with pytest.raises(DataError, match="no samples"):
        read_wav_mono(empty)

    garbage = tmp_path / "g.wav"
    garbage.write_bytes(b"not a riff header at all")
    with pytest.raises(DataError):
        read_wav_mono(garbage)

    # short garbage makes the stdlib reader raise bare EOFError; it must
    # still surface as a DataError with a non-empty message
    stub = tmp_path / "stub.wav"
    stub.write_bytes(b"RIFF")
    with pytest.raises(DataError, match="truncated or not a wav file"):
        read_wav_mono(stub)
