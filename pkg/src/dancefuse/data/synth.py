"""Synthetic stand-ins for the paired music-dance and text-action corpora.

Both generators are pure functions of ``(n, seed, cfg)``. Clip lengths are
whole multiples of the tokenizer's downsample factor so every clip maps to
an integer number of motion tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import make_rng
from .text import TEMPLATES, default_vocab, tokenize_text
from .types import (
    HEAD,
    L_FOOT,
    L_HAND,
    L_KNEE,
    N_JOINTS,
    R_FOOT,
    R_HAND,
    R_KNEE,
    REST_POSE,
    ROOT,
    AudioFeatureSeq,
    Corpus,
    CorpusItem,
    MotionSequence,
    TooShortError,
)

PRIMITIVES = ("jump", "spin", "walk", "wave", "crouch", "kick")


@dataclass
class SynthConfig:
    fps: float = 60.0
    downsample: int = 8
    audio_dim: int = 16
    dance_tokens: tuple[int, int] = (45, 90)   # 6-12 s at 60 fps
    action_tokens: tuple[int, int] = (15, 75)  # 2-10 s
    tempo_hz: tuple[float, float] = (1.0, 3.0)

    @property
    def token_rate(self) -> float:
        return self.fps / self.downsample


# ---------------------------------------------------------------------------
# audio
# ---------------------------------------------------------------------------


def _round_half_up(x):
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def synth_audio_features(beat_times, duration: float, rate: float, seed: int,
                         dim: int = 16) -> AudioFeatureSeq:
    """Beat impulses, an onset envelope and smooth band-limited harmonic channels."""
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    beats = np.asarray(list(beat_times), dtype=np.float64)
    if beats.size and (beats.min() < 0 or beats.max() > duration):
        raise ValueError(f"beat times must lie in [0, {duration}], got range "
                         f"[{beats.min()}, {beats.max()}]")
    n = int(_round_half_up(duration * rate))
    feats = np.zeros((n, dim))
    idx = np.clip(_round_half_up(beats * rate), 0, n - 1) if beats.size else np.zeros(0, np.int64)
    feats[idx, 0] = 1.0
    frames = np.arange(n)
    decay = max(0.25 * rate, 1e-6)
    for i in idx:
        after = frames >= i
        feats[after, 1] = np.maximum(feats[after, 1], np.exp(-(frames[after] - i) / decay))
    rng = make_rng(seed, "audio")
    t = frames / rate
    for c in range(2, dim):
        freqs = rng.uniform(0.1, 2.0, size=3)
        phases = rng.uniform(0, 2 * np.pi, size=3)
        amps = rng.uniform(0.2, 1.0, size=3)
        feats[:, c] = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(0) / amps.sum()
    return AudioFeatureSeq(features=feats, rate=rate, beat_times=beats.tolist())


# ---------------------------------------------------------------------------
# dance
# ---------------------------------------------------------------------------


def _dance_item(rng: np.random.Generator, cfg: SynthConfig, audio_seed: int) -> CorpusItem:
    n_tok = int(rng.integers(cfg.dance_tokens[0], cfg.dance_tokens[1] + 1))
    T = n_tok * cfg.downsample
    t = np.arange(T) / cfg.fps
    duration = T / cfg.fps
    tempo = rng.uniform(*cfg.tempo_hz)
    phase0 = rng.uniform(0, 2 * np.pi)
    # intensity swells over 8-beat phrases and fades in from a still pose
    floor = rng.uniform(0.2, 0.5)
    swell = floor + (1 - floor) * (0.5 - 0.5 * np.cos(2 * np.pi * t * tempo / 8 + rng.uniform(0, 2 * np.pi)))
    intensity = swell * _envelope(t, 0.0, np.inf, ramp=0.5)

    amp_range = {HEAD: (0.03, 0.08), L_HAND: (0.15, 0.35), R_HAND: (0.15, 0.35),
                 L_FOOT: (0.05, 0.12), R_FOOT: (0.05, 0.12), L_KNEE: (0.05, 0.15), R_KNEE: (0.05, 0.15)}
    pos = np.repeat(REST_POSE[None], T, axis=0)
    for j, (lo, hi) in amp_range.items():
        amp = rng.uniform(lo, hi, size=3) * rng.choice([-1.0, 1.0], size=3)
        if j in (L_FOOT, R_FOOT):
            amp[1] = min(abs(amp[1]), 0.04) * np.sign(amp[1])
        phase = phase0 + np.pi * rng.integers(0, 2) + rng.uniform(-0.15, 0.15)
        pos[:, j] += amp[None] * (intensity * np.sin(2 * np.pi * tempo * t + phase))[:, None]

    # root: small bounce at twice the tempo plus a slow horizontal sway
    bounce = rng.uniform(0.01, 0.03)
    radius = rng.uniform(0.1, 0.4)
    omega = 2 * np.pi / rng.uniform(4.0, 10.0)
    psi = rng.uniform(0, 2 * np.pi)
    shift = np.zeros((T, 3))
    shift[:, 0] = radius * (np.cos(omega * t + psi) - np.cos(psi))
    shift[:, 2] = radius * (np.sin(omega * t + psi) - np.sin(psi))
    shift[:, 1] = bounce * intensity * np.sin(4 * np.pi * tempo * t + 2 * phase0)
    pos += shift[:, None, :]

    # beats where the common oscillation phase reaches pi/2
    k0 = np.ceil((phase0 - np.pi / 2) / (2 * np.pi))
    beats = []
    k = k0
    while True:
        b = (np.pi / 2 - phase0 + 2 * np.pi * k) / (2 * np.pi * tempo)
        if b >= duration:
            break
        if b >= 0:
            beats.append(float(b))
        k += 1
    audio = synth_audio_features(beats, duration, cfg.token_rate, audio_seed, cfg.audio_dim)
    motion = MotionSequence(pos.reshape(T, N_JOINTS * 3), cfg.fps)
    return CorpusItem(motion=motion, audio=audio, label=f"dance tempo={tempo:.3f}")


def synth_dance_corpus(n: int, seed: int, cfg: SynthConfig | None = None) -> Corpus:
    """Beat-locked oscillating dances, each paired with synthetic music features."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cfg = cfg or SynthConfig()
    items = [_dance_item(make_rng(seed, "dance", i), cfg, audio_seed=seed * 100003 + i) for i in range(n)]
    return Corpus(items, "dance")


# ---------------------------------------------------------------------------
# action
# ---------------------------------------------------------------------------


def _envelope(t: np.ndarray, start: float, end: float, ramp: float = 0.25) -> np.ndarray:
    up = np.clip((t - start) / ramp, 0, 1)
    down = np.clip((end - t) / ramp, 0, 1)
    e = np.minimum(up, down)
    return 0.5 - 0.5 * np.cos(np.pi * e)


def _rotate_y(p: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotate ``(T, J, 3)`` points about the vertical axis by per-frame angles."""
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    out = p.copy()
    out[..., 0] = c * p[..., 0] + s * p[..., 2]
    out[..., 2] = -s * p[..., 0] + c * p[..., 2]
    return out


def _action_motion(kind: str, t: np.ndarray, env: np.ndarray, rng: np.random.Generator,
                   fps: float) -> np.ndarray:
    T = len(t)
    rest = np.repeat(REST_POSE[None], T, axis=0)
    dev = np.zeros_like(rest)
    if kind == "jump":
        period = rng.uniform(0.6, 1.0)
        height = rng.uniform(0.15, 0.4)
        lift = height * np.maximum(0.0, np.sin(np.pi * t / period * 2)) ** 2
        dev[:, :, 1] += lift[:, None]
        dev[:, [L_HAND, R_HAND], 1] += 0.3 * lift[:, None]
    elif kind == "crouch":
        period = rng.uniform(2.0, 3.0)
        depth = rng.uniform(0.3, 0.5)
        down = depth * (1 - np.cos(2 * np.pi * t / period)) / 2
        for j in (ROOT, HEAD, L_HAND, R_HAND):
            dev[:, j, 1] -= down
        dev[:, [L_KNEE, R_KNEE], 1] -= 0.5 * down[:, None]
        dev[:, [L_KNEE, R_KNEE], 2] += 0.6 * down[:, None]
        dev[:, [L_HAND, R_HAND], 2] += 0.5 * down[:, None]
    elif kind == "wave":
        side = rng.choice([L_HAND, R_HAND])
        freq = rng.uniform(1.5, 2.5)
        amp = rng.uniform(0.1, 0.2)
        dev[:, side, 1] += 0.8
        dev[:, side, 0] += amp * np.sin(2 * np.pi * freq * t)
    elif kind == "kick":
        period = rng.uniform(1.2, 2.0)
        foot, knee = (L_FOOT, L_KNEE) if rng.random() < 0.5 else (R_FOOT, R_KNEE)
        reach = rng.uniform(0.4, 0.6)
        high = rng.uniform(0.4, 0.8)
        pulse = np.sin(np.pi * np.clip((t % period) / 0.5, 0, 1)) ** 2
        dev[:, foot, 2] += reach * pulse
        dev[:, foot, 1] += high * pulse
        dev[:, knee, 2] += 0.5 * reach * pulse
        dev[:, knee, 1] += 0.4 * high * pulse
    elif kind == "spin":
        rate = rng.uniform(np.pi / 2, 2 * np.pi) * rng.choice([-1.0, 1.0])
        spread = rest.copy()
        spread[:, L_HAND] = [0.70, 1.35, 0.0]
        spread[:, R_HAND] = [-0.70, 1.35, 0.0]
        theta = rate * np.cumsum(env) / fps
        base = rest + env[:, None, None] * (spread - rest)
        rel = base - base[:, ROOT:ROOT + 1] * [1, 0, 1]
        return _rotate_y(rel, theta)
    elif kind == "walk":
        radius = rng.uniform(0.5, 1.0)
        speed = rng.uniform(0.5, 1.2)
        arc = np.cumsum(env) * speed / fps
        ang = arc / radius
        gait = 2 * np.pi * arc / 0.6
        swing = 0.2 * np.sin(gait) * env
        local = rest.copy()
        local[:, L_FOOT, 2] += swing
        local[:, R_FOOT, 2] -= swing
        local[:, L_FOOT, 1] += 0.08 * np.maximum(0, np.sin(gait)) * env
        local[:, R_FOOT, 1] += 0.08 * np.maximum(0, -np.sin(gait)) * env
        local[:, L_HAND, 2] -= 0.6 * swing
        local[:, R_HAND, 2] += 0.6 * swing
        body = _rotate_y(local, -ang)
        path = np.stack([radius * np.sin(ang), np.zeros(T), radius * (1 - np.cos(ang))], axis=1)
        return body + path[:, None, :]
    else:
        raise ValueError(f"unknown primitive {kind!r}")
    return rest + env[:, None, None] * dev


def _action_item(rng: np.random.Generator, cfg: SynthConfig, vocab: dict[str, int]) -> CorpusItem:
    kind = PRIMITIVES[int(rng.integers(len(PRIMITIVES)))]
    n_tok = int(rng.integers(cfg.action_tokens[0], cfg.action_tokens[1] + 1))
    T = n_tok * cfg.downsample
    t = np.arange(T) / cfg.fps
    start = rng.uniform(0.1, 0.4)
    end = t[-1] - rng.uniform(0.1, 0.4)
    env = _envelope(t, start, end)
    joints = _action_motion(kind, t, env, rng, cfg.fps)
    templates = TEMPLATES[kind]
    sentence = templates[int(rng.integers(len(templates)))]
    motion = MotionSequence(joints.reshape(T, N_JOINTS * 3), cfg.fps)
    return CorpusItem(motion=motion, text=tokenize_text(sentence, vocab), label=kind)


def synth_action_corpus(n: int, seed: int, cfg: SynthConfig | None = None) -> Corpus:
    """Short action clips drawn from parameterized primitives with templated captions."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cfg = cfg or SynthConfig()
    vocab = default_vocab()
    return Corpus([_action_item(make_rng(seed, "action", i), cfg, vocab) for i in range(n)], "action")


# ---------------------------------------------------------------------------
# windowing
# ---------------------------------------------------------------------------


def window_motion(m: MotionSequence, window: int = 64, stride: int = 16) -> list[MotionSequence]:
    if m.T < window:
        raise TooShortError(f"motion has T={m.T} frames, shorter than window={window}")
    n = (m.T - window) // stride + 1
    return [MotionSequence(m.frames[i * stride:i * stride + window], m.fps) for i in range(n)]


def corpus_windows(corpus: Corpus, window: int = 64, stride: int = 16) -> np.ndarray:
    """All windows of a corpus stacked as ``(N, window, d_m)``; short clips are skipped."""
    out = [w.frames for item in corpus for w in
           (window_motion(item.motion, window, stride) if item.motion.T >= window else [])]
    if not out:
        raise TooShortError(f"no motion in corpus {corpus.tag!r} reaches {window} frames")
    return np.stack(out)
