"""Dual-branch translation transformer.

An audio encoder and a text encoder each turn their conditioning sequence
into features; a single causal motion decoder (one parameter set) reads
either of them through cross-attention and predicts the next motion token.
Blocks are pre-norm: ``x + sublayer(LayerNorm(x))``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..checkpoint import CheckpointError, load_checkpoint
from ..data.text import MAX_TEXT_LEN, PAD, default_vocab
from ..data.types import AudioFeatureSeq, TextTokens
from ..numerics import (
    Tensor,
    embedding,
    layer_norm,
    make_rng,
    masked_softmax,
    relu,
)


class ConfigError(ValueError):
    pass


@dataclass
class XModalConfig:
    K: int = 1024
    audio_dim: int = 16
    vocab_size: int = len(default_vocab()) + 2
    hidden: int = 512
    heads: int = 8
    layers: int = 6
    ff_mult: int = 4
    max_len: int = 512
    text_len: int = MAX_TEXT_LEN

    @property
    def bos(self) -> int:
        return self.K


def sinusoidal_positions(n: int, width: int) -> np.ndarray:
    pos = np.arange(n)[:, None]
    i = np.arange(width // 2)[None, :]
    angle = pos / np.power(10000.0, 2 * i / width)
    pe = np.zeros((n, width))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : width - width // 2])
    return pe


def causal_mask(n: int) -> np.ndarray:
    """Additive ``(n, n)`` mask: 0 on and below the diagonal, -inf above."""
    return np.triu(np.full((n, n), -np.inf), k=1)


def key_mask(valid: np.ndarray) -> np.ndarray:
    """Additive ``(B, 1, 1, S)`` mask from a boolean ``(B, S)`` key-validity array."""
    return np.where(valid, 0.0, -np.inf)[:, None, None, :]


def attention(q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """``softmax(q k^T / sqrt(c) + mask) v`` over the last two axes."""
    c = q.shape[-1]
    if k.shape[-1] != c or v.shape[-2] != k.shape[-2]:
        raise ValueError(f"attention shapes disagree: q {q.shape}, k {k.shape}, v {v.shape}")
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(c))
    return masked_softmax(scores, mask) @ v


def attention_weights(q: Tensor, k: Tensor, mask: np.ndarray | None = None) -> np.ndarray:
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(q.shape[-1]))
    return masked_softmax(scores, mask).data


class XModalModel:
    def __init__(self, cfg: XModalConfig, seed: int = 0):
        if cfg.hidden % cfg.heads:
            raise ConfigError(f"hidden width {cfg.hidden} is not divisible by heads={cfg.heads}")
        if cfg.max_len < cfg.text_len:
            raise ConfigError(f"max_len={cfg.max_len} is shorter than the text length {cfg.text_len}")
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        self._rng = make_rng(seed, "xmodal-init")
        c, ff = cfg.hidden, cfg.hidden * cfg.ff_mult

        self._linear("audio_enc.embed", cfg.audio_dim, c)
        self._table("text_enc.embed", cfg.vocab_size, c)
        for enc in ("audio_enc", "text_enc"):
            for i in range(cfg.layers):
                b = f"{enc}.block{i}"
                self._norm(f"{b}.ln1", c)
                self._attn(f"{b}.attn", c)
                self._norm(f"{b}.ln2", c)
                self._linear(f"{b}.ff1", c, ff)
                self._linear(f"{b}.ff2", ff, c)
            self._norm(f"{enc}.ln_out", c)

        self._table("dec.embed", cfg.K + 1, c)
        for i in range(cfg.layers):
            b = f"dec.block{i}"
            self._norm(f"{b}.ln1", c)
            self._attn(f"{b}.self", c)
            self._norm(f"{b}.ln2", c)
            self._attn(f"{b}.cross", c)
            self._norm(f"{b}.ln3", c)
            self._linear(f"{b}.ff1", c, ff)
            self._linear(f"{b}.ff2", ff, c)
        self._norm("dec.ln_out", c)
        self._linear("dec.head", c, cfg.K)
        self.pos = sinusoidal_positions(cfg.max_len, c)
        del self._rng

    # -- parameter construction -----------------------------------------
    def _add(self, name: str, value: np.ndarray) -> None:
        self.params[name] = Tensor(value, requires_grad=True)

    def _linear(self, name: str, n_in: int, n_out: int) -> None:
        self._add(f"{name}.w", self._rng.normal(0, 1 / np.sqrt(n_in), size=(n_in, n_out)))
        self._add(f"{name}.b", np.zeros(n_out))

    def _table(self, name: str, n: int, width: int) -> None:
        self._add(name, self._rng.normal(0, 1.0, size=(n, width)))

    def _norm(self, name: str, width: int) -> None:
        self._add(f"{name}.g", np.ones(width))
        self._add(f"{name}.b", np.zeros(width))

    def _attn(self, name: str, width: int) -> None:
        for part in ("q", "k", "v", "o"):
            self._linear(f"{name}.{part}", width, width)

    # -- layers -----------------------------------------------------------
    def linear(self, x: Tensor, name: str) -> Tensor:
        return x @ self.params[f"{name}.w"] + self.params[f"{name}.b"]

    def norm(self, x: Tensor, name: str) -> Tensor:
        return layer_norm(x, self.params[f"{name}.g"], self.params[f"{name}.b"])

    def mha(self, x: Tensor, ctx: Tensor, name: str, mask: np.ndarray | None) -> Tensor:
        B, N, c = x.shape
        S = ctx.shape[1]
        h = self.cfg.heads
        dh = c // h
        q = self.linear(x, f"{name}.q").reshape(B, N, h, dh).transpose(0, 2, 1, 3)
        k = self.linear(ctx, f"{name}.k").reshape(B, S, h, dh).transpose(0, 2, 1, 3)
        v = self.linear(ctx, f"{name}.v").reshape(B, S, h, dh).transpose(0, 2, 1, 3)
        o = attention(q, k, v, mask).transpose(0, 2, 1, 3).reshape(B, N, c)
        return self.linear(o, f"{name}.o")

    def ff(self, x: Tensor, name: str) -> Tensor:
        return self.linear(relu(self.linear(x, f"{name}.ff1")), f"{name}.ff2")

    def _positions(self, n: int) -> np.ndarray:
        if n > self.cfg.max_len:
            raise ValueError(f"sequence length {n} exceeds max_len={self.cfg.max_len}")
        return self.pos[:n]

    def _encoder(self, x: Tensor, enc: str, mask: np.ndarray | None) -> Tensor:
        x = x + self._positions(x.shape[1])
        for i in range(self.cfg.layers):
            b = f"{enc}.block{i}"
            y = self.norm(x, f"{b}.ln1")
            x = x + self.mha(y, y, f"{b}.attn", mask)
            x = x + self.ff(self.norm(x, f"{b}.ln2"), b)
        return self.norm(x, f"{enc}.ln_out")

    # -- public forward pieces ------------------------------------------
    def encode_audio(self, features, valid: np.ndarray | None = None) -> Tensor:
        """``(B, T', c)`` features for audio ``(B, T', d_a)`` (or one ``AudioFeatureSeq``)."""
        f = features.features if isinstance(features, AudioFeatureSeq) else features
        f = f.data if isinstance(f, Tensor) else np.asarray(f, dtype=np.float64)
        if f.ndim == 2:
            f = f[None]
        if f.shape[-1] != self.cfg.audio_dim:
            raise ValueError(f"audio width {f.shape[-1]} != configured {self.cfg.audio_dim}")
        mask = key_mask(valid) if valid is not None else None
        return self._encoder(self.linear(Tensor(f), "audio_enc.embed"), "audio_enc", mask)

    def encode_text(self, ids) -> tuple[Tensor, np.ndarray]:
        """Features ``(B, 84, c)`` plus the boolean key-validity mask (False at PAD)."""
        if isinstance(ids, TextTokens):
            ids = ids.ids
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim == 1:
            ids = ids[None]
        valid = ids != PAD
        x = embedding(self.params["text_enc.embed"], ids)
        return self._encoder(x, "text_enc", key_mask(valid)), valid

    def decoder_features(self, tokens, cond: Tensor, cond_valid: np.ndarray | None = None) -> Tensor:
        """Final-layer (normalized) decoder features ``(B, M, c)``."""
        toks = np.asarray(tokens, dtype=np.int64)
        if toks.ndim == 1:
            toks = toks[None]
        if toks.size and (toks.min() < 0 or toks.max() > self.cfg.K):
            raise IndexError(f"motion token out of range [0, {self.cfg.K + 1})")
        M = toks.shape[1]
        x = embedding(self.params["dec.embed"], toks) + self._positions(M)
        self_mask = causal_mask(M)
        cross = key_mask(cond_valid) if cond_valid is not None else None
        for i in range(self.cfg.layers):
            b = f"dec.block{i}"
            y = self.norm(x, f"{b}.ln1")
            x = x + self.mha(y, y, f"{b}.self", self_mask)
            x = x + self.mha(self.norm(x, f"{b}.ln2"), cond, f"{b}.cross", cross)
            x = x + self.ff(self.norm(x, f"{b}.ln3"), b)
        return self.norm(x, "dec.ln_out")

    def project(self, feats: Tensor) -> Tensor:
        return self.linear(feats, "dec.head")

    def decoder_forward(self, tokens, cond: Tensor, cond_valid: np.ndarray | None = None) -> Tensor:
        """Logits ``(B, M, K)``; position ``i`` predicts the token after ``tokens[:i+1]``."""
        return self.project(self.decoder_features(tokens, cond, cond_valid))

    # -- persistence -----------------------------------------------------
    def hp(self) -> dict[str, object]:
        return {"section": "xmodal", **{f"xm.{k}": v for k, v in asdict(self.cfg).items()}}

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {f"xm.{k}": p.data for k, p in self.params.items()}

    @classmethod
    def from_checkpoint(cls, hp: dict[str, str], tensors: dict[str, np.ndarray]) -> XModalModel:
        if hp.get("section") != "xmodal":
            raise CheckpointError(f"expected an xmodal checkpoint, found section={hp.get('section')!r}")
        cfg = XModalConfig(**{f.name: type(f.default)(hp[f"xm.{f.name}"]) for f in fields(XModalConfig)})
        model = cls(cfg)
        for k, p in model.params.items():
            p.data = tensors[f"xm.{k}"].copy()
        return model

    @classmethod
    def load(cls, path) -> XModalModel:
        return cls.from_checkpoint(*load_checkpoint(path))
