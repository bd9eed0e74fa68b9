"""Kinetic and geometric motion descriptors.

These are compact stand-ins for the usual mocap feature extractors: the
kinetic vector summarizes per-joint speed statistics, the geometric vector
time-averages a handful of boolean pose relations.
"""

from __future__ import annotations

import numpy as np

from ..data.types import (
    L_FOOT,
    L_HAND,
    R_FOOT,
    R_HAND,
    ROOT,
    MotionSequence,
    TooShortError,
)

HANDS_CLOSE_M = 0.3
FOOT_RAISED_RATIO = 0.2
DISTANCE_PAIRS = ((L_HAND, R_HAND), (L_FOOT, R_FOOT), (L_HAND, L_FOOT), (R_HAND, R_FOOT))


def joint_speeds(m: MotionSequence) -> np.ndarray:
    """``(T, J)`` joint speeds in m/s from central differences (one-sided at the ends)."""
    if m.T < 2:
        raise TooShortError(f"need at least 2 frames for velocities, got T={m.T}")
    vel = np.gradient(m.joints(), 1.0 / m.fps, axis=0)
    return np.linalg.norm(vel, axis=-1)


def kinetic_features(m: MotionSequence) -> np.ndarray:
    """Per-joint mean squared speed followed by per-joint speed variance (width 2J)."""
    s = joint_speeds(m)
    return np.concatenate([(s * s).mean(axis=0), s.var(axis=0)])


def geometric_features(m: MotionSequence) -> np.ndarray:
    """Fractions of frames on which each boolean relation holds (width J, values in [0, 1]).

    Relations: left / right foot raised above a fraction of the root height,
    hands closer than 0.3 m, root above its median height, and four joint-pair
    distances above their own sequence medians.
    """
    p = m.joints()
    root_y = p[:, ROOT, 1]
    ground = min(p[:, L_FOOT, 1].min(), p[:, R_FOOT, 1].min())
    thresh = ground + FOOT_RAISED_RATIO * (root_y - ground)
    rel = [
        p[:, L_FOOT, 1] > thresh,
        p[:, R_FOOT, 1] > thresh,
        np.linalg.norm(p[:, L_HAND] - p[:, R_HAND], axis=-1) < HANDS_CLOSE_M,
        root_y > np.median(root_y),
    ]
    for a, b in DISTANCE_PAIRS:
        dist = np.linalg.norm(p[:, a] - p[:, b], axis=-1)
        rel.append(dist > np.median(dist))
    return np.array([r.mean() for r in rel], dtype=np.float64)
