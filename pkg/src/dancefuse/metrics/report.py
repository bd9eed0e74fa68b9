"""Aggregate evaluation over sets of motions and the key=value report format."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..data.io import read_audio, read_motion
from ..data.types import MotionSequence
from .beats import beat_align, dance_beats
from .features import geometric_features, kinetic_features
from .frechet import diversity, fid
from .freeze import auc_f, pff
from .mpd import knn_predictor, mpd

METRIC_KEYS = ("FID_k", "FID_g", "Div_k", "Div_g", "BeatAlign", "PFF", "AUC_f", "MPD")


@dataclass
class EvalParams:
    beat_sigma: float = 3.0
    beat_unit: str = "frames"
    pff_speed: float = 0.015
    pff_seconds: float = 3.0
    aucf_max: float = 0.03
    mpd_past: int = 25
    mpd_future: int = 30
    mpd_k: int = 10
    mpd_stride: int = 4
    div_pairs: int = 0  # 0 = every pair
    seed: int = 0


@dataclass
class MetricReport:
    metrics: dict[str, float]
    params: dict[str, object] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"{k}={self.metrics[k]!r}" for k in METRIC_KEYS]
        lines += [f"param.{k}={v}" for k, v in self.params.items()]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRIC_KEYS)
        w.writerow([repr(self.metrics[k]) for k in METRIC_KEYS])
        return buf.getvalue()

    @classmethod
    def parse(cls, text: str) -> MetricReport:
        metrics, params = {}, {}
        for line in text.splitlines():
            if not line.strip():
                continue
            k, v = line.split("=", 1)
            if k.startswith("param."):
                params[k[6:]] = v
            else:
                if k in metrics:
                    raise ValueError(f"duplicate metric {k}")
                metrics[k] = float(v)
        return cls(metrics, params)


def evaluate_motions(generated: Sequence[MotionSequence], reference: Sequence[MotionSequence],
                     music_beats: Sequence[Sequence[float] | None] | None = None,
                     seams: Sequence[float | None] | None = None,
                     mpd_reference: Sequence[MotionSequence] | None = None,
                     params: EvalParams | None = None) -> MetricReport:
    """Compute every metric for ``generated`` against ``reference``.

    ``music_beats[i]`` are beat times in seconds for generated motion ``i``;
    ``seams[i]`` is the time where text takes effect (defaults to mid-clip).
    """
    p = params or EvalParams()
    gen_k = [kinetic_features(m) for m in generated]
    gen_g = [geometric_features(m) for m in generated]
    ref_k = [kinetic_features(m) for m in reference]
    ref_g = [geometric_features(m) for m in reference]
    n_pairs = p.div_pairs or None

    aligns = []
    for m, beats in zip(generated, music_beats or [None] * len(generated)):
        if beats is None or len(beats) == 0:
            continue
        scale = m.fps if p.beat_unit == "frames" else 1.0
        aligns.append(beat_align(np.asarray(beats) * scale, dance_beats(m, p.beat_unit), p.beat_sigma))

    oracle = knn_predictor(list(mpd_reference or reference), p.mpd_k, p.mpd_past, p.mpd_future,
                           stride=p.mpd_stride)
    dists = []
    for m, seam in zip(generated, seams or [None] * len(generated)):
        lo, hi = p.mpd_past / m.fps, m.duration - p.mpd_future / m.fps
        if hi < lo:
            continue
        t1 = min(max(m.duration / 2 if seam is None else seam, lo), hi)
        dists.append(mpd(oracle, m, t1 - p.mpd_past / m.fps, t1, t1 + p.mpd_future / m.fps))

    metrics = {
        "FID_k": fid(gen_k, ref_k),
        "FID_g": fid(gen_g, ref_g),
        "Div_k": diversity(gen_k, n_pairs, p.seed),
        "Div_g": diversity(gen_g, n_pairs, p.seed),
        "BeatAlign": float(np.mean(aligns)) if aligns else float("nan"),
        "PFF": float(np.mean([pff(m, p.pff_speed, p.pff_seconds) for m in generated])),
        "AUC_f": float(np.mean([auc_f(m, p.aucf_max, min_dur=p.pff_seconds) for m in generated])),
        "MPD": float(np.mean(dists)) if dists else float("nan"),
    }
    params_out = dict(vars(p), n_generated=len(generated), n_reference=len(reference))
    return MetricReport(metrics, params_out)


def _read_sidecar_seam(path: Path) -> float | None:
    if not path.exists():
        return None
    for line in path.read_text().splitlines():
        if line.startswith("text_start="):
            v = line.split("=", 1)[1].strip()
            return float(v) if v and float(v) >= 0 else None
    return None


def load_motion_dir(d) -> tuple[list[MotionSequence], list[list[float] | None], list[float | None]]:
    """Motions in ``d`` with same-stem ``.taud`` beats and ``.config`` text_start sidecars."""
    d = Path(d)
    motions, beats, seams = [], [], []
    for f in sorted(d.glob("*.tmot")):
        motions.append(read_motion(f))
        audio = f.with_suffix(".taud")
        beats.append(read_audio(audio).beat_times if audio.exists() else None)
        seams.append(_read_sidecar_seam(f.with_suffix(".config")))
    return motions, beats, seams


def evaluate_dirs(generated_dir, reference_dir, mpd_ref_dir=None,
                  params: EvalParams | None = None) -> MetricReport:
    gen, beats, seams = load_motion_dir(generated_dir)
    ref, _, _ = load_motion_dir(reference_dir)
    if len(gen) < 2 or len(ref) < 2:
        raise ValueError(f"need >= 2 motions per side, found {len(gen)} generated / {len(ref)} reference")
    mref = load_motion_dir(mpd_ref_dir)[0] if mpd_ref_dir else None
    return evaluate_motions(gen, ref, beats, seams, mref, params)
