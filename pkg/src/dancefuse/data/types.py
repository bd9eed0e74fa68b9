from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Joint layout (y is up, meters).
JOINTS = ("root", "head", "l_hand", "r_hand", "l_foot", "r_foot", "l_knee", "r_knee")
ROOT, HEAD, L_HAND, R_HAND, L_FOOT, R_FOOT, L_KNEE, R_KNEE = range(len(JOINTS))
N_JOINTS = len(JOINTS)

REST_POSE = np.array([
    [0.00, 0.95, 0.00],
    [0.00, 1.65, 0.00],
    [0.25, 1.00, 0.05],
    [-0.25, 1.00, 0.05],
    [0.10, 0.05, 0.00],
    [-0.10, 0.05, 0.00],
    [0.10, 0.50, 0.03],
    [-0.10, 0.50, 0.03],
])


class TooShortError(ValueError):
    pass


@dataclass
class MotionSequence:
    """``frames`` is ``(T, d_m)`` joint positions in meters, ``d_m = 3 * J``."""

    frames: np.ndarray
    fps: float = 60.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ValueError(f"motion frames must be (T>=1, d_m), got {self.frames.shape}")
        if self.frames.shape[1] % 3:
            raise ValueError(f"d_m={self.frames.shape[1]} is not divisible by 3")
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("motion contains non-finite values")

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def d_m(self) -> int:
        return self.frames.shape[1]

    @property
    def n_joints(self) -> int:
        return self.d_m // 3

    @property
    def duration(self) -> float:
        return self.T / self.fps

    def joints(self) -> np.ndarray:
        """``(T, J, 3)`` view of the frames."""
        return self.frames.reshape(self.T, self.n_joints, 3)


@dataclass
class AudioFeatureSeq:
    """Per-frame music features; channel 0 is the beat impulse, 1 the onset envelope."""

    features: np.ndarray
    rate: float
    beat_times: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"audio features must be 2-D, got {self.features.shape}")
        self.beat_times = [float(b) for b in self.beat_times]

    @property
    def T(self) -> int:
        return self.features.shape[0]

    @property
    def duration(self) -> float:
        return self.T / self.rate


@dataclass
class TextTokens:
    ids: np.ndarray
    length: int
    text: str = ""

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)


@dataclass
class CorpusItem:
    motion: MotionSequence
    audio: AudioFeatureSeq | None = None
    text: TextTokens | None = None
    label: str = ""


@dataclass
class Corpus:
    items: list[CorpusItem]
    tag: str  # "dance" | "action"

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def subset(self, idx) -> Corpus:
        return Corpus([self.items[i] for i in idx], self.tag)
