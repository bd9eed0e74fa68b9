"""Flat ``key=value`` run configuration shared by every CLI command."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .fusion import FusionSchedule
from .metrics.report import EvalParams
from .vqvae.model import VqVaeConfig
from .vqvae.train import VqTrainConfig
from .xmodal.model import XModalConfig
from .xmodal.train import XmTrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    # synthetic data
    data_n: int = 100
    # tokenizer
    vq_K: int = 1024
    vq_d: int = 128
    vq_hidden: int = 64
    vq_beta: float = 0.25
    vq_lr: float = 1e-4
    vq_batch_size: int = 128
    vq_steps: int = 5000
    vq_window: int = 64
    vq_stride: int = 16
    vq_epoch_steps: int = 0
    # transformer
    xm_hidden: int = 512
    xm_heads: int = 8
    xm_layers: int = 6
    xm_ff_mult: int = 4
    xm_lr: float = 1e-4
    xm_batch_size: int = 64
    xm_steps: int = 20000
    xm_max_tokens: int = 96
    xm_music_weight: float = 1.0
    xm_text_weight: float = 1.0
    # generation
    gen_top_k: int = 10
    gen_fusion_peak: float = 0.8
    gen_fusion_ramp: float = 0.2
    gen_fusion_level: str = "feature"
    # metrics
    eval_beat_sigma: float = 3.0
    eval_beat_unit: str = "frames"
    eval_pff_speed: float = 0.015
    eval_pff_seconds: float = 3.0
    eval_aucf_max: float = 0.03
    eval_mpd_past: int = 25
    eval_mpd_future: int = 30
    eval_mpd_k: int = 10
    eval_mpd_stride: int = 4
    eval_div_pairs: int = 0

    def __post_init__(self):
        if self.gen_fusion_level not in ("feature", "logit"):
            raise ConfigError(f"gen_fusion_level must be feature or logit, got {self.gen_fusion_level!r}")
        if self.eval_beat_unit not in ("frames", "seconds"):
            raise ConfigError(f"eval_beat_unit must be frames or seconds, got {self.eval_beat_unit!r}")
        if self.gen_top_k < 1:
            raise ConfigError(f"gen_top_k must be >= 1, got {self.gen_top_k}")
        if not 0 < self.gen_fusion_peak <= 1 or not 0 < self.gen_fusion_ramp <= 0.5:
            raise ConfigError(f"fusion peak must be in (0, 1] and ramp in (0, 0.5], got "
                              f"{self.gen_fusion_peak} / {self.gen_fusion_ramp}")

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> RunConfig:
        known = {f.name: f for f in fields(cls)}
        kw: dict[str, object] = {}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{n}: expected key=value, got {raw.strip()!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in known:
                raise ConfigError(f"{source}:{n}: unknown key {k!r}")
            kw[k] = _coerce(known[k].default, v, f"{source}:{n}")
        return cls(**kw)

    @classmethod
    def load(cls, path) -> RunConfig:
        return cls.parse(Path(path).read_text(), str(path))

    def override(self, **kw) -> RunConfig:
        """Copy with non-None keyword values applied."""
        known = {f.name for f in fields(self)}
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        for k, v in kw.items():
            if k not in known:
                raise ConfigError(f"unknown key {k!r}")
            if v is not None:
                vals[k] = v
        return RunConfig(**vals)

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    # -- views onto module configs -----------------------------------------
    def vq_config(self, d_m: int = 24, fps: float = 60.0) -> VqVaeConfig:
        return VqVaeConfig(d_m=d_m, hidden=self.vq_hidden, d=self.vq_d, K=self.vq_K, beta=self.vq_beta, fps=fps)

    def vq_train(self) -> VqTrainConfig:
        return VqTrainConfig(lr=self.vq_lr, batch_size=self.vq_batch_size, steps=self.vq_steps,
                             seed=self.seed, window=self.vq_window, stride=self.vq_stride,
                             epoch_steps=self.vq_epoch_steps)

    def xm_config(self, K: int, audio_dim: int) -> XModalConfig:
        return XModalConfig(K=K, audio_dim=audio_dim, hidden=self.xm_hidden, heads=self.xm_heads,
                            layers=self.xm_layers, ff_mult=self.xm_ff_mult)

    def xm_train(self) -> XmTrainConfig:
        return XmTrainConfig(lr=self.xm_lr, batch_size=self.xm_batch_size, steps=self.xm_steps,
                             seed=self.seed, max_tokens=self.xm_max_tokens,
                             music_weight=self.xm_music_weight, text_weight=self.xm_text_weight)

    def schedule(self, start: float, duration: float) -> FusionSchedule:
        return FusionSchedule(start, duration, peak=self.gen_fusion_peak, ramp_fraction=self.gen_fusion_ramp)

    def eval_params(self) -> EvalParams:
        return EvalParams(beat_sigma=self.eval_beat_sigma, beat_unit=self.eval_beat_unit,
                          pff_speed=self.eval_pff_speed, pff_seconds=self.eval_pff_seconds,
                          aucf_max=self.eval_aucf_max, mpd_past=self.eval_mpd_past,
                          mpd_future=self.eval_mpd_future, mpd_k=self.eval_mpd_k,
                          mpd_stride=self.eval_mpd_stride, div_pairs=self.eval_div_pairs, seed=self.seed)


def _coerce(default, value: str, where: str):
    try:
        if isinstance(default, bool):
            if value not in ("True", "False", "true", "false", "1", "0"):
                raise ValueError(value)
            return value in ("True", "true", "1")
        return type(default)(value)
    except ValueError:
        raise ConfigError(f"{where}: cannot read {value!r} as {type(default).__name__}") from None
