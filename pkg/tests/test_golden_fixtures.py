"""Checked-in LRF1 fixtures with known CRCs.

The same files are validated by the extractor package's independent parser,
so any drift in the byte layout shows up on both sides.
"""

import os
import struct
import zlib

import pytest

from nser.reprio.lrf import read_lrf

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures", "golden")

# A message with its own CRC-32 appended always hashes to this residue.
CRC_RESIDUE = 0x2144DF1C


def load_index():
    rows = []
    with open(os.path.join(FIXTURE_DIR, "checksums.tsv"), encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, crc, uid, d, num_enc, num_dec = line.split("\t")
            rows.append((name, int(crc, 16), uid, int(d), int(num_enc), int(num_dec)))
    assert rows, "fixture index is empty"
    return rows


@pytest.mark.parametrize("name,crc,uid,d,num_enc,num_dec", load_index())
def test_golden_fixture(name, crc, uid, d, num_enc, num_dec):
    path = os.path.join(FIXTURE_DIR, name)
    raw = open(path, "rb").read()
    stored = struct.unpack("<I", raw[-4:])[0]
    assert stored == crc, f"{name}: stored CRC {stored:#010x} != recorded {crc:#010x}"
    assert zlib.crc32(raw[:-4]) == stored
    assert zlib.crc32(raw) == CRC_RESIDUE
    rep = read_lrf(path)
    assert rep.utterance_id == uid
    assert rep.d == d
    assert rep.num_encoder_layers == num_enc
    assert rep.num_decoder_layers == num_dec
