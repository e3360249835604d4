#!/usr/bin/env python3
"""Regenerates the pooling fixtures independently of the C++ code.

Writes fixture_corpus.tsv, fixture_layer.prst (encoded with struct/zlib) and
fixture_pooled.csv: the mean of every frame overlapping each phone, found by
explicit interval intersection.
"""
import math
import struct
import zlib
from pathlib import Path

HERE = Path(__file__).resolve().parent
HOP = 0.02
DIM = 4

WORDS = [
    ("u01", "speak", 0, ["S", "P", "IY1", "K"]),
    ("u02", "beak", 0, ["B", "IY1", "K"]),
    ("u03", "peak", 0, ["P", "IY1", "K"]),
    ("u04", "lapse", 0, ["L", "AE1", "P", "S"]),
    ("u05", "spin", 0, ["S", "P", "IH1", "N"]),
    ("u06", "bin", 0, ["B", "IH1", "N"]),
    ("u07", "pin", 0, ["P", "IH1", "N"]),
    ("u08", "skin", 0, ["S", "K", "IH1", "N"]),
    ("u09", "stop", 0, ["S", "T", "AA1", "P"]),
    ("u10", "slow", 0, ["S", "L", "OW1"]),
    ("u11", "smile", 0, ["S", "M", "AY1", "L"]),
    ("u12", "snow", 0, ["S", "N", "OW1"]),
    ("u13", "swib", 1, ["S", "W", "IH1", "B"]),
    ("u14", "top", 0, ["T", "AA1", "P"]),
    ("u15", "dog", 0, ["D", "AO1", "G"]),
    ("u16", "cat", 0, ["K", "AE1", "T"]),
    ("u17", "gap", 0, ["G", "AE1", "P"]),
    ("u18", "spray", 0, ["S", "P", "R", "EY1"]),
    ("u19", "banana", 0, ["B", "AH0", "N", "AE1", "N", "AH0"]),
    ("u20", "potato", 0, ["P", "AH0", "T", "EY1", "T", "OW2"]),
]
# Utterances preceded by a silence row that the loader drops.
LEADING_SILENCE = {"u01", "u07", "u19"}
# u20's store ends before its final phone starts, so that phone overlaps no
# frame and must be skipped.
TRUNCATED = {"u20": 0.48}


def is_vowel(label):
    return label[-1].isdigit()


def phone_times(phones):
    t = 0.05
    out = []
    for i, p in enumerate(phones):
        dur = 0.115 if is_vowel(p) else 0.065 + 0.005 * (i % 3)
        out.append((round(t, 6), round(t + dur, 6)))
        t += dur
    return out


def frame_value(u, t, j):
    return struct.unpack("<f", struct.pack("<f", math.sin(0.37 * t + 0.11 * j + u) * (1 + 0.1 * j)))[0]


def main():
    rows = []
    records = []
    pooled = []
    for ui, (uid, word, pseudo, phones) in enumerate(WORDS):
        times = phone_times(phones)
        if uid in LEADING_SILENCE:
            rows.append((uid, word, pseudo, 0, "sil", 0.0, 0.05))
        offset = 1 if uid in LEADING_SILENCE else 0
        for i, (p, (s, e)) in enumerate(zip(phones, times)):
            rows.append((uid, word, pseudo, i + offset, p, s, e))
        end = TRUNCATED.get(uid, times[-1][1])
        n_frames = math.ceil(end / HOP - 1e-9)
        frames = [[frame_value(ui, t, j) for j in range(DIM)] for t in range(n_frames)]
        records.append((uid, frames))
        for i, (p, (s, e)) in enumerate(zip(phones, times)):
            hits = [t for t in range(n_frames)
                    if min((t + 1) * HOP, e) - max(t * HOP, s) > 1e-12]
            if not hits:
                pooled.append((uid, i, p, 0, None))
                continue
            mean = [sum(frames[t][j] for t in hits) / len(hits) for j in range(DIM)]
            pooled.append((uid, i, p, len(hits), mean))

    with open(HERE / "fixture_corpus.tsv", "w") as f:
        f.write("utterance_id\tword_form\tis_pseudoword\tindex_in_word\tlabel\tstart_s\tend_s\n")
        for r in rows:
            f.write("\t".join(str(x) for x in r) + "\n")

    header = b"PRST" + struct.pack("<I", 1)
    model = b"fixture"
    header += struct.pack("<I", len(model)) + model
    header += struct.pack("<iIddQ", -3, DIM, HOP, 0.0, len(records))
    header += struct.pack("<I", zlib.crc32(header) & 0xFFFFFFFF)
    body = b""
    for uid, frames in records:
        b = uid.encode()
        body += struct.pack("<I", len(b)) + b + struct.pack("<I", len(frames))
        for fr in frames:
            body += struct.pack("<%df" % DIM, *fr)
    (HERE / "fixture_layer.prst").write_bytes(header + body)

    with open(HERE / "fixture_pooled.csv", "w") as f:
        f.write("utterance_id,index_in_word,label,n_frames," +
                ",".join("v%d" % j for j in range(DIM)) + "\n")
        for uid, i, p, n, mean in pooled:
            vals = ",".join(repr(v) for v in mean) if mean else ",".join("" for _ in range(DIM))
            f.write(f"{uid},{i},{p},{n},{vals}\n")


if __name__ == "__main__":
    main()
