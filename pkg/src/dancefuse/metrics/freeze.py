from __future__ import annotations

import numpy as np

from ..data.types import MotionSequence
from .features import joint_speeds

FREEZE_SPEED = 0.015   # m/s
FREEZE_SECONDS = 3.0
AUC_MAX_THRESHOLD = 0.03
AUC_POINTS = 64


def _frozen_fraction(max_speed: np.ndarray, fps: float, v_thresh: float, min_dur: float) -> float:
    cand = max_speed < v_thresh
    # maximal runs of candidate frames
    edges = np.diff(np.concatenate([[0], cand.astype(np.int8), [0]]))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0]
    lengths = ends - starts
    # a run of n frames lasts n / fps seconds; reaching min_dur counts
    frozen = lengths[lengths >= min_dur * fps - 1e-9].sum()
    return 100.0 * frozen / len(max_speed)


def pff(m: MotionSequence, v_thresh: float = FREEZE_SPEED, min_dur: float = FREEZE_SECONDS) -> float:
    """Percentage of frames inside freeze runs (max joint speed below ``v_thresh``
    for at least ``min_dur`` seconds)."""
    return _frozen_fraction(joint_speeds(m).max(axis=1), m.fps, v_thresh, min_dur)


def auc_f(m: MotionSequence, t_max: float = AUC_MAX_THRESHOLD, n_points: int = AUC_POINTS,
          min_dur: float = FREEZE_SECONDS) -> float:
    """Trapezoidal area under PFF(threshold) on [0, t_max], divided by t_max."""
    ms = joint_speeds(m).max(axis=1)
    th = np.linspace(0.0, t_max, n_points)
    curve = np.array([_frozen_fraction(ms, m.fps, v, min_dur) for v in th])
    return float(np.trapezoid(curve, th) / t_max)
