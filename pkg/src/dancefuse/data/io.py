"""Plain-text motion, audio and manifest files.

Motion::

    TMOT v1 <T> <d_m> <fps>
    <T lines of d_m space-separated decimals>

Audio::

    TAUD v1 <T_a> <d_a> <rate>
    BEATS t1 t2 ...
    <T_a lines of d_a decimals>

Manifest: tab-separated ``motion  audio  text  label`` with a header row;
paths are relative to the manifest and empty fields mean "absent".
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .text import default_vocab, tokenize_text
from .types import AudioFeatureSeq, Corpus, CorpusItem, MotionSequence


class FormatError(ValueError):
    pass


def _rows(a: np.ndarray) -> str:
    return "".join(" ".join(repr(v) for v in row) + "\n" for row in a.tolist())


def write_motion(path, m: MotionSequence) -> None:
    with open(path, "w") as f:
        f.write(f"TMOT v1 {m.T} {m.d_m} {m.fps!r}\n")
        f.write(_rows(m.frames))


def read_motion(path) -> MotionSequence:
    with open(path) as f:
        head = f.readline().split()
        if head[:2] != ["TMOT", "v1"] or len(head) != 5:
            raise FormatError(f"{path}: not a TMOT v1 file")
        T, d = int(head[2]), int(head[3])
        data = np.loadtxt(f, ndmin=2) if T else np.zeros((0, d))
    if data.shape != (T, d):
        raise FormatError(f"{path}: header says {T}x{d}, body is {data.shape[0]}x{data.shape[1]}")
    return MotionSequence(data, float(head[4]))


def write_audio(path, a: AudioFeatureSeq) -> None:
    with open(path, "w") as f:
        f.write(f"TAUD v1 {a.T} {a.features.shape[1]} {float(a.rate)!r}\n")
        f.write(" ".join(["BEATS"] + [repr(float(b)) for b in a.beat_times]) + "\n")
        f.write(_rows(a.features))


def read_audio(path) -> AudioFeatureSeq:
    with open(path) as f:
        head = f.readline().split()
        if head[:2] != ["TAUD", "v1"] or len(head) != 5:
            raise FormatError(f"{path}: not a TAUD v1 file")
        beats = f.readline().split()
        if not beats or beats[0] != "BEATS":
            raise FormatError(f"{path}: missing BEATS line")
        T, d = int(head[2]), int(head[3])
        data = np.loadtxt(f, ndmin=2)
    if data.shape != (T, d):
        raise FormatError(f"{path}: header says {T}x{d}, body is {data.shape}")
    return AudioFeatureSeq(data, float(head[4]), [float(b) for b in beats[1:]])


def write_tokens(path, tokens, K: int) -> None:
    with open(path, "w") as f:
        f.write(f"TTOK v1 {K}\n")
        f.write(" ".join(str(int(t)) for t in tokens) + "\n")


def read_tokens(path) -> tuple[np.ndarray, int]:
    with open(path) as f:
        head = f.readline().split()
        if head[:2] != ["TTOK", "v1"] or len(head) != 3:
            raise FormatError(f"{path}: not a TTOK v1 file")
        toks = np.array(f.read().split(), dtype=np.int64)
    return toks, int(head[2])


MANIFEST_FIELDS = ("motion", "audio", "text", "label")


def write_corpus(out_dir, corpus: Corpus, prefix: str = "item") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, item in enumerate(corpus):
        stem = f"{prefix}_{i:04d}"
        write_motion(out / f"{stem}.tmot", item.motion)
        audio = ""
        if item.audio is not None:
            audio = f"{stem}.taud"
            write_audio(out / audio, item.audio)
        text = item.text.text if item.text is not None else ""
        rows.append((f"{stem}.tmot", audio, text, item.label))
    manifest = out / "manifest.tsv"
    with open(manifest, "w", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(("#tag", corpus.tag, "", ""))
        w.writerow(MANIFEST_FIELDS)
        w.writerows(rows)
    return manifest


def read_corpus(manifest) -> Corpus:
    manifest = Path(manifest)
    if manifest.is_dir():
        manifest = manifest / "manifest.tsv"
    base = manifest.parent
    vocab = default_vocab()
    with open(manifest, newline="") as f:
        rows = list(csv.reader(f, delimiter="\t"))
    if len(rows) < 2 or rows[0][0] != "#tag" or tuple(rows[1]) != MANIFEST_FIELDS:
        raise FormatError(f"{manifest}: malformed manifest header")
    items = []
    for motion, audio, text, label in rows[2:]:
        items.append(CorpusItem(
            motion=read_motion(base / motion),
            audio=read_audio(base / audio) if audio else None,
            text=tokenize_text(text, vocab) if text else None,
            label=label,
        ))
    return Corpus(items, rows[0][1])
