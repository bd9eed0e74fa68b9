"""Autoregressive generation with late audio/text fusion and top-k sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data.types import AudioFeatureSeq, MotionSequence, TextTokens
from .numerics import Tensor, log_softmax_np, make_rng, no_grad
from .vqvae.model import VqVaeModel, decode_tokens
from .xmodal.model import XModalModel

FUSION_LEVELS = ("feature", "logit")


class RangeError(ValueError):
    pass


class CompatibilityError(ValueError):
    pass


@dataclass(frozen=True)
class FusionSchedule:
    """Text influence window in seconds and the shape of its weight curve."""

    effect_start: float
    effect_duration: float
    peak: float = 0.8
    ramp_fraction: float = 0.2

    def __post_init__(self):
        if not 0 < self.peak <= 1:
            raise ValueError(f"peak must be in (0, 1], got {self.peak}")
        if not 0 < self.ramp_fraction <= 0.5:
            raise ValueError(f"ramp_fraction must be in (0, 0.5], got {self.ramp_fraction}")
        if self.effect_duration < 0:
            raise ValueError(f"effect_duration must be >= 0, got {self.effect_duration}")

    @property
    def effect_end(self) -> float:
        return self.effect_start + self.effect_duration


def fusion_weight(t: float, s: FusionSchedule) -> tuple[float, float]:
    """``(w_text, w_audio)`` at time ``t``.

    Half-cosine ramp from 0 to ``peak`` over the first ``ramp_fraction`` of
    the effect range, plateau, then the mirrored ramp back to 0.
    """
    if s.effect_duration <= 0:
        return 0.0, 1.0
    u = (t - s.effect_start) / s.effect_duration
    if u <= 0 or u >= 1:
        w = 0.0
    elif u < s.ramp_fraction:
        w = s.peak * (1 - np.cos(np.pi * u / s.ramp_fraction)) / 2
    elif u > 1 - s.ramp_fraction:
        w = s.peak * (1 - np.cos(np.pi * (1 - u) / s.ramp_fraction)) / 2
    else:
        w = s.peak
    w = float(w)
    return w, 1.0 - w


def fuse_features(dec_audio, dec_text, w_text: float):
    """``w_text * dec_text + (1 - w_text) * dec_audio``."""
    a = dec_audio.data if isinstance(dec_audio, Tensor) else np.asarray(dec_audio, dtype=np.float64)
    b = dec_text.data if isinstance(dec_text, Tensor) else np.asarray(dec_text, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"feature shapes differ: audio {a.shape}, text {b.shape}")
    if w_text == 0:
        return a.copy()
    if w_text == 1:
        return b.copy()
    return w_text * b + (1.0 - w_text) * a


def sample_topk(logits, k: int, rng: np.random.Generator) -> int:
    """Draw from the renormalized softmax over the ``k`` largest logits.

    Exactly one uniform draw is consumed per call so that two runs sharing a
    seed stay aligned step for step. Ties at the cut go to the lower index.
    """
    x = np.asarray(logits, dtype=np.float64).ravel()
    if not 1 <= k <= len(x):
        raise ValueError(f"top_k must be in [1, {len(x)}], got {k}")
    if np.isnan(x).any():
        raise ValueError("logits contain NaN")
    u = rng.random()
    top = np.argsort(-x, kind="stable")[:k]
    vals = x[top]
    if np.isposinf(vals).any():
        p = np.isposinf(vals).astype(np.float64)
    elif np.isneginf(vals).all():
        p = np.ones(len(vals))
    else:
        p = np.exp(log_softmax_np(vals))
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return int(top[min(i, len(top) - 1)])


@dataclass
class GenerationRequest:
    audio: AudioFeatureSeq
    text: TextTokens | None = None
    schedule: FusionSchedule | None = None
    top_k: int = 10
    seed: int = 0
    fusion_level: str = "feature"


@dataclass
class GenerationResult:
    tokens: np.ndarray
    motion: MotionSequence
    w_text: np.ndarray = field(default_factory=lambda: np.zeros(0))


def check_compatible(xm: XModalModel, vq: VqVaeModel, vq_d: int | None = None) -> None:
    if xm.cfg.K != vq.cfg.K or (vq_d and vq_d != vq.cfg.d):
        raise CompatibilityError(
            f"checkpoints disagree: transformer trained on K={xm.cfg.K}, d={vq_d or '?'}; "
            f"tokenizer has K={vq.cfg.K}, d={vq.cfg.d}")


def _project(xm: XModalModel, feat: np.ndarray) -> np.ndarray:
    return xm.project(Tensor(feat[None])).data[0]


def generate(xm: XModalModel, vq: VqVaeModel, req: GenerationRequest,
             train_usage: np.ndarray | None = None) -> GenerationResult:
    """Sample one token per audio step, then decode to ``8 * T'`` frames.

    Output token 0 is the random start token, drawn uniformly from the codes
    with nonzero ``train_usage`` (all codes when usage is unknown). Token
    ``i`` sits at time ``i / audio.rate``.
    """
    check_compatible(xm, vq)
    if req.fusion_level not in FUSION_LEVELS:
        raise ValueError(f"fusion_level must be one of {FUSION_LEVELS}, got {req.fusion_level!r}")
    if req.top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {req.top_k}")
    audio = req.audio
    n = len(audio.features)
    if n < 1:
        raise ValueError("audio must cover at least one token step")
    expected = vq.cfg.fps / vq.cfg.downsample
    if abs(audio.rate - expected) > 1e-9:
        raise ValueError(f"audio rate {audio.rate} does not match the token rate {expected}")
    sched = req.schedule
    if req.text is not None:
        if sched is None:
            raise ValueError("text given without a fusion schedule")
        dur = n / audio.rate
        if sched.effect_start < 0 or sched.effect_end > dur + 1e-9:
            raise RangeError(f"effect range [{sched.effect_start}, {sched.effect_end}] s "
                             f"lies outside the audio (0 to {dur} s)")

    K = xm.cfg.K
    usage = np.ones(K) if train_usage is None else np.asarray(train_usage)
    used = np.flatnonzero(usage > 0)
    if len(used) == 0:
        used = np.arange(K)
    rng = make_rng(req.seed, "generate")
    tokens = [int(used[rng.integers(len(used))])]
    weights = np.zeros(n)

    with no_grad():
        cond_a = xm.encode_audio(audio.features)
        cond_t = valid_t = None
        if req.text is not None:
            cond_t, valid_t = xm.encode_text(req.text)
        for i in range(1, n):
            past = np.array([xm.cfg.bos] + tokens)[None]
            w = fusion_weight(i / audio.rate, sched)[0] if req.text is not None else 0.0
            weights[i] = w
            fa = xm.decoder_features(past, cond_a).data[0, -1]
            if w == 0:
                logits = _project(xm, fa)
            else:
                ft = xm.decoder_features(past, cond_t, valid_t).data[0, -1]
                if req.fusion_level == "feature":
                    logits = _project(xm, fuse_features(fa, ft, w))
                else:
                    la, lt = _project(xm, fa), _project(xm, ft)
                    logits = fuse_features(la, lt, w)
            tokens.append(sample_topk(logits, req.top_k, rng))
    toks = np.array(tokens, dtype=np.int64)
    return GenerationResult(toks, decode_tokens(vq, toks), weights)
