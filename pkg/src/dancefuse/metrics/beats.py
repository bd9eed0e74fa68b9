from __future__ import annotations

import numpy as np

from ..data.types import MotionSequence, TooShortError
from .features import joint_speeds

SMOOTH_FRAMES = 5


def dance_beats(m: MotionSequence, unit: str = "seconds") -> np.ndarray:
    """Local minima of the smoothed mean joint speed that fall below its median.

    Returns times in seconds, or frame indices with ``unit="frames"``.
    """
    if m.T < 3:
        raise TooShortError(f"need at least 3 frames for dance beats, got T={m.T}")
    speed = joint_speeds(m).mean(axis=1)
    half = SMOOTH_FRAMES // 2
    padded = np.pad(speed, half, mode="edge")
    smooth = np.convolve(padded, np.ones(SMOOTH_FRAMES) / SMOOTH_FRAMES, mode="valid")
    # rounding noise on a constant speed must not register as minima
    tol = 1e-9 * max(1.0, float(smooth.max()))
    mid = smooth[1:-1]
    is_min = ((mid < smooth[:-2] - tol) & (mid <= smooth[2:] + tol)
              & (mid < np.percentile(smooth, 50) - tol))
    frames = np.nonzero(is_min)[0] + 1
    if unit == "frames":
        return frames.astype(np.float64)
    if unit == "seconds":
        return frames / m.fps
    raise ValueError(f"unknown beat unit {unit!r}")


def beat_align(music_beats, dance_beats, sigma: float = 3.0) -> float:
    """Mean over music beats of ``exp(-d^2 / (2 sigma^2))``, ``d`` the distance to the
    nearest dance beat. Both lists must share a unit; an empty dance list scores 0."""
    bm = np.asarray(music_beats, dtype=np.float64)
    bd = np.asarray(dance_beats, dtype=np.float64)
    if bm.size == 0:
        raise ValueError("beat_align needs at least one music beat")
    if bd.size == 0:
        return 0.0
    nearest = np.abs(bm[:, None] - bd[None, :]).min(axis=1)
    return float(np.exp(-nearest ** 2 / (2 * sigma ** 2)).mean())
