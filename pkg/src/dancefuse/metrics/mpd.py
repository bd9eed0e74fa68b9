"""Motion prediction distance with a pluggable multi-hypothesis predictor."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..data.types import Corpus, MotionSequence
from ..numerics.gradcheck import ContractError

# (past, future_len) -> list of (future_len, d_m) arrays
PredictorOracle = Callable[[MotionSequence, int], Sequence[np.ndarray]]


def mpd(oracle: PredictorOracle, m: MotionSequence, t0: float, t1: float, t2: float) -> float:
    """Smallest per-element RMS distance between any predicted continuation of
    ``m[t0:t1]`` and the actual frames ``m[t1:t2]`` (times in seconds)."""
    i0, i1, i2 = (int(np.floor(t * m.fps + 0.5)) for t in (t0, t1, t2))
    if not 0 <= i0 < i1 < i2 <= m.T:
        raise ValueError(f"need 0 <= t0 < t1 < t2 <= duration; got frames {i0}, {i1}, {i2} of {m.T}")
    past = MotionSequence(m.frames[i0:i1], m.fps)
    truth = m.frames[i1:i2]
    hyps = list(oracle(past, i2 - i1))
    if not hyps:
        raise ContractError("predictor returned no hypotheses")
    best = np.inf
    for h in hyps:
        h = np.asarray(h, dtype=np.float64)
        if h.shape != truth.shape:
            raise ContractError(f"hypothesis shape {h.shape} != expected {truth.shape}")
        best = min(best, float(np.linalg.norm(h - truth) / np.sqrt(truth.size)))
    return best


def _past_features(windows: np.ndarray, fps: float) -> np.ndarray:
    """Batched ``kinetic_features`` over ``(N, L, d_m)`` windows."""
    n, length, d = windows.shape
    vel = np.gradient(windows.reshape(n, length, d // 3, 3), 1.0 / fps, axis=1)
    s = np.linalg.norm(vel, axis=-1)
    return np.concatenate([(s * s).mean(axis=1), s.var(axis=1)], axis=1)


def knn_predictor(reference: Corpus | Sequence[MotionSequence], k: int, past_len: int,
                  future_len: int, stride: int = 1) -> PredictorOracle:
    """Nearest-neighbour predictor over reference windows.

    Reference windows of ``past_len + future_len`` frames are indexed by the
    kinetic features of their past part. A query returns the continuations of
    the ``k`` closest windows, translated so that each window's last past root
    position coincides with the query's.
    """
    motions = [it.motion for it in reference] if isinstance(reference, Corpus) else list(reference)
    span = past_len + future_len
    pasts, futures, anchors = [], [], []
    fps = None
    for m in motions:
        fps = fps or m.fps
        for s in range(0, m.T - span + 1, stride):
            w = m.frames[s:s + span]
            pasts.append(w[:past_len])
            futures.append(w[past_len:])
            anchors.append(w[past_len - 1, :3])
    if len(pasts) < k:
        raise ValueError(f"reference has {len(pasts)} windows of {span} frames, fewer than k={k}")
    keys = _past_features(np.stack(pasts), fps)
    futures_a = np.stack(futures)
    anchors_a = np.stack(anchors)

    def oracle(past: MotionSequence, n_future: int) -> list[np.ndarray]:
        q = _past_features(past.frames[None, -past_len:], past.fps)[0]
        order = np.argsort(np.linalg.norm(keys - q, axis=1), kind="stable")[:k]
        shift = np.tile(past.frames[-1, :3], past.frames.shape[1] // 3)
        out = []
        for i in order:
            fut = futures_a[i] - np.tile(anchors_a[i], futures_a.shape[2] // 3) + shift
            out.append(fut[:n_future])
        return out

    return oracle
