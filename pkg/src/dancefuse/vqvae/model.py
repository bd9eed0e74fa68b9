"""Convolutional motion VQ-VAE.

Encoder: three stride-2 convolutions (width 4, padding 1) with ReLU, then a
width-3 projection to the latent width, so ``T' = T / 8``. Decoder mirrors it
with nearest-neighbour upsampling followed by width-3 convolutions.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from ..data.types import MotionSequence
from ..numerics import (
    ShapeError,
    Tensor,
    conv1d,
    embedding,
    make_rng,
    no_grad,
    relu,
    straight_through,
    tabs,
    upsample_nearest,
)

DOWNSAMPLE_LAYERS = 3


@dataclass
class VqVaeConfig:
    d_m: int = 24
    hidden: int = 64
    d: int = 128
    K: int = 1024
    beta: float = 0.25
    use_bias: bool = True
    fps: float = 60.0

    @property
    def downsample(self) -> int:
        return 2 ** DOWNSAMPLE_LAYERS


class VqVaeModel:
    """Parameters, normalization statistics and codebook usage of one tokenizer."""

    def __init__(self, cfg: VqVaeConfig, seed: int = 0, zero_init: bool = False):
        if cfg.beta < 0:
            raise ValueError(f"beta must be >= 0, got {cfg.beta}")
        self.cfg = cfg
        rng = make_rng(seed, "vqvae-init")
        h, d, dm = cfg.hidden, cfg.d, cfg.d_m
        shapes: dict[str, tuple[int, ...]] = {}
        c_in = dm
        for i in range(DOWNSAMPLE_LAYERS):
            shapes[f"enc.conv{i}.w"] = (4, c_in, h)
            c_in = h
        shapes["enc.out.w"] = (3, h, d)
        shapes["dec.in.w"] = (3, d, h)
        for i in range(DOWNSAMPLE_LAYERS):
            shapes[f"dec.up{i}.w"] = (3, h, h)
        shapes["dec.out.w"] = (3, h, dm)

        self.params: dict[str, Tensor] = {}
        for name, shp in shapes.items():
            fan_in = shp[0] * shp[1]
            w = np.zeros(shp) if zero_init else rng.normal(0, np.sqrt(2.0 / fan_in), size=shp)
            self.params[name] = Tensor(w, requires_grad=True)
            if cfg.use_bias:
                self.params[name[:-2] + ".b"] = Tensor(np.zeros(shp[2]), requires_grad=True)
        K = cfg.K
        cb = np.zeros((K, d)) if zero_init else rng.uniform(-1.0 / K, 1.0 / K, size=(K, d))
        self.params["codebook"] = Tensor(cb, requires_grad=True)
        self.mean = np.zeros(dm)
        self.std = np.ones(dm)
        self.usage_counts: dict[str, np.ndarray] = {}

    @property
    def codebook(self) -> np.ndarray:
        return self.params["codebook"].data

    def _conv(self, x: Tensor, name: str, stride: int, padding: int) -> Tensor:
        return conv1d(x, self.params[name + ".w"], stride=stride, padding=padding,
                      bias=self.params.get(name + ".b"))

    def set_normalization(self, windows: np.ndarray) -> None:
        flat = windows.reshape(-1, windows.shape[-1])
        self.mean = flat.mean(axis=0)
        self.std = np.maximum(flat.std(axis=0), 1e-3)

    def record_usage(self, tag: str, tokens) -> None:
        counts = self.usage_counts.setdefault(tag, np.zeros(self.cfg.K, dtype=np.int64))
        np.add.at(counts, np.asarray(tokens, dtype=np.int64).ravel(), 1)

    # -- persistence -----------------------------------------------------
    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {f"vq.{k}": p.data for k, p in self.params.items()}
        out["vq.norm.mean"] = self.mean
        out["vq.norm.std"] = self.std
        for tag, c in self.usage_counts.items():
            out[f"vq.usage.{tag}"] = c.astype(np.float64)
        return out

    def hp(self) -> dict[str, object]:
        return {"section": "vqvae", **{f"vq.{k}": v for k, v in asdict(self.cfg).items()}}

    def save(self, path, extra_hp: dict | None = None, extra_tensors: dict | None = None) -> None:
        save_checkpoint(path, {**self.hp(), **(extra_hp or {})},
                        {**self.state_tensors(), **(extra_tensors or {})})

    @classmethod
    def from_checkpoint(cls, hp: dict[str, str], tensors: dict[str, np.ndarray]) -> VqVaeModel:
        if hp.get("section") != "vqvae":
            raise CheckpointError(f"expected a vqvae checkpoint, found section={hp.get('section')!r}")
        kw = {}
        for f in fields(VqVaeConfig):
            raw = hp[f"vq.{f.name}"]
            kw[f.name] = raw == "True" if f.type in ("bool", bool) else type(f.default)(raw)
        model = cls(VqVaeConfig(**kw), zero_init=True)
        for k, p in model.params.items():
            p.data = tensors[f"vq.{k}"].copy()
        model.mean = tensors["vq.norm.mean"].copy()
        model.std = tensors["vq.norm.std"].copy()
        for name, arr in tensors.items():
            if name.startswith("vq.usage."):
                model.usage_counts[name[len("vq.usage."):]] = arr.astype(np.int64)
        return model

    @classmethod
    def load(cls, path) -> VqVaeModel:
        return cls.from_checkpoint(*load_checkpoint(path))


def _frames(m) -> np.ndarray:
    if isinstance(m, MotionSequence):
        return m.frames
    return np.asarray(m, dtype=np.float64)


def encode(model: VqVaeModel, m) -> Tensor:
    """Latent sequence ``(T/8, d)`` (or batched ``(B, T/8, d)``) for motion frames."""
    x = _frames(m)
    T = x.shape[-2]
    if T % model.cfg.downsample:
        raise ShapeError(f"motion length {T} is not divisible by {model.cfg.downsample}")
    h = Tensor((x - model.mean) / model.std)
    for i in range(DOWNSAMPLE_LAYERS):
        h = relu(model._conv(h, f"enc.conv{i}", stride=2, padding=1))
    return model._conv(h, "enc.out", stride=1, padding=1)


def decode(model: VqVaeModel, z_q) -> Tensor:
    """Motion frames ``(8 * T', d_m)`` from quantized latents ``(T', d)``."""
    h = z_q if isinstance(z_q, Tensor) else Tensor(z_q)
    if h.shape[-2] < 1:
        raise ShapeError("cannot decode an empty latent sequence")
    h = relu(model._conv(h, "dec.in", stride=1, padding=1))
    for i in range(DOWNSAMPLE_LAYERS):
        h = relu(model._conv(upsample_nearest(h, 2), f"dec.up{i}", stride=1, padding=1))
    out = model._conv(h, "dec.out", stride=1, padding=1)
    return out * model.std + model.mean


def quantize(z, codebook: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest codebook entry per latent row; ties go to the lowest index.

    Returns ``(z_q, tokens)`` shaped like ``z`` and ``z.shape[:-1]``.
    """
    zd = z.data if isinstance(z, Tensor) else np.asarray(z, dtype=np.float64)
    e = np.asarray(codebook, dtype=np.float64)
    if zd.shape[-1] != e.shape[1]:
        raise ShapeError(f"latent width {zd.shape[-1]} != codebook width {e.shape[1]}")
    flat = zd.reshape(-1, e.shape[1])
    approx = (flat * flat).sum(1)[:, None] - 2.0 * flat @ e.T + (e * e).sum(1)[None, :]
    tokens = approx.argmin(axis=1)
    best = approx[np.arange(len(flat)), tokens]
    scale = (flat * flat).sum(1) + (e * e).sum(1).max() + 1.0
    near = approx <= (best + 1e-9 * scale)[:, None]
    # rows with near-ties: settle on exact squared distances
    for r in np.nonzero(near.sum(1) > 1)[0]:
        cand = np.nonzero(near[r])[0]
        exact = ((flat[r][None, :] - e[cand]) ** 2).sum(1)
        tokens[r] = cand[np.flatnonzero(exact == exact.min())[0]]
    tokens = tokens.reshape(zd.shape[:-1])
    return e[tokens], tokens


def vq_loss(m, m_hat: Tensor, z: Tensor, z_q: Tensor, beta: float) -> tuple[Tensor, dict[str, float]]:
    """Reconstruction L1 (mean) + codebook loss + beta * commitment loss.

    The two latent terms average the squared L2 row distance over latent
    steps. ``z_q`` must be the codebook rows gathered as a tracked tensor so
    the codebook term reaches the codebook.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    m = _frames(m)
    if m_hat.shape != m.shape or z.shape != z_q.shape:
        raise ShapeError(f"vq_loss shapes disagree: m {m.shape} / m_hat {m_hat.shape}, "
                         f"z {z.shape} / z_q {z_q.shape}")
    rows = float(np.prod(z.shape[:-1]))
    recon = tabs(m_hat - m).mean()
    codebook = ((z.detach() - z_q) ** 2).sum() * (1.0 / rows)
    commit = ((z - z_q.detach()) ** 2).sum() * (1.0 / rows)
    loss = recon + codebook + beta * commit
    return loss, {"recon": recon.item(), "codebook": codebook.item(), "commit": commit.item()}


def forward(model: VqVaeModel, m) -> tuple[Tensor, dict[str, float], np.ndarray]:
    """Full training forward: encode, quantize, straight-through decode, loss."""
    z = encode(model, m)
    _, tokens = quantize(z, model.codebook)
    z_q = embedding(model.params["codebook"], tokens)
    m_hat = decode(model, straight_through(z, z_q.data))
    loss, parts = vq_loss(m, m_hat, z, z_q, model.cfg.beta)
    return loss, parts, tokens


def reconstruct(model: VqVaeModel, m) -> np.ndarray:
    with no_grad():
        z = encode(model, m)
        z_q, _ = quantize(z, model.codebook)
        return decode(model, z_q).data


def decode_tokens(model: VqVaeModel, tokens) -> MotionSequence:
    toks = np.asarray(tokens, dtype=np.int64)
    if toks.size and (toks.min() < 0 or toks.max() >= model.cfg.K):
        raise IndexError(f"token out of range [0, {model.cfg.K})")
    with no_grad():
        frames = decode(model, model.codebook[toks]).data
    return MotionSequence(frames, model.cfg.fps)
