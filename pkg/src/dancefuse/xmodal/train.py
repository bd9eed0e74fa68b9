from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

import numpy as np

from ..checkpoint import load_checkpoint, save_checkpoint
from ..data.text import MAX_TEXT_LEN, PAD
from ..numerics import Adam, make_rng, no_grad, softmax_cross_entropy
from ..vqvae.train import adam_state, restore_adam
from .model import ConfigError, XModalConfig, XModalModel

log = logging.getLogger(__name__)

BRANCHES = ("music", "text")


@dataclass
class MusicExample:
    audio: np.ndarray    # (T', d_a), same rate as the motion tokens
    tokens: np.ndarray   # (T',)


@dataclass
class TextExample:
    text_ids: np.ndarray  # (84,) PAD-filled
    tokens: np.ndarray


@dataclass
class XmTrainConfig:
    lr: float = 1e-4
    batch_size: int = 64
    steps: int = 2000
    seed: int = 0
    max_tokens: int = 96
    music_weight: float = 1.0
    text_weight: float = 1.0


@dataclass
class XmTrainResult:
    model: XModalModel
    log_rows: list[dict[str, float]]
    optimizer: Adam
    train_usage: np.ndarray
    vq_d: int = 0
    step: int = 0


def _crop(tokens: np.ndarray, n: int, rng, extra: np.ndarray | None = None):
    if len(tokens) <= n:
        return tokens, extra
    s = int(rng.integers(0, len(tokens) - n + 1))
    return tokens[s:s + n], (extra[s:s + n] if extra is not None else None)


def _pick(n: int, batch: int, rng) -> np.ndarray:
    if n <= batch:
        return np.arange(n)
    return np.sort(rng.choice(n, size=batch, replace=False))


def make_batch(branch: str, examples: Sequence, idx: np.ndarray, max_tokens: int, bos: int, rng):
    """Teacher-forcing arrays for one branch.

    Returns ``(inputs, targets, loss_mask, cond, cond_valid)``; ``inputs`` is
    the target shifted right behind BOS and ``loss_mask`` covers the true
    target length only.
    """
    toks, conds = [], []
    for i in idx:
        ex = examples[i]
        if branch == "music":
            t, a = _crop(np.asarray(ex.tokens), max_tokens, rng, np.asarray(ex.audio))
            conds.append(a)
        else:
            t, _ = _crop(np.asarray(ex.tokens), max_tokens, rng)
            conds.append(np.asarray(ex.text_ids))
        toks.append(t)
    B, M = len(toks), max(len(t) for t in toks)
    targets = np.zeros((B, M), dtype=np.int64)
    mask = np.zeros((B, M), dtype=bool)
    for b, t in enumerate(toks):
        targets[b, :len(t)] = t
        mask[b, :len(t)] = True
    inputs = np.concatenate([np.full((B, 1), bos), targets[:, :-1]], axis=1)
    if branch == "music":
        cond = np.zeros((B, M, conds[0].shape[1]))
        for b, a in enumerate(conds):
            cond[b, :len(a)] = a
        return inputs, targets, mask, cond, mask.copy()
    cond = np.stack(conds)
    return inputs, targets, mask, cond, cond != PAD


def _condition(model: XModalModel, branch: str, cond: np.ndarray, valid: np.ndarray):
    if branch == "music":
        return model.encode_audio(cond, valid), valid
    return model.encode_text(cond)


def branch_loss(model: XModalModel, branch: str, batch):
    inputs, targets, mask, cond, valid = batch
    feats, valid = _condition(model, branch, cond, valid)
    logits = model.decoder_forward(inputs, feats, valid)
    return softmax_cross_entropy(logits, targets, mask)


def _check_examples(music: Sequence[MusicExample], text: Sequence[TextExample], K: int) -> None:
    if not music or not text:
        raise ConfigError(f"both branches need examples (music={len(music)}, text={len(text)})")
    for ex in list(music) + list(text):
        t = np.asarray(ex.tokens)
        if len(t) == 0:
            raise ConfigError("empty target token sequence")
        if t.min() < 0 or t.max() >= K:
            raise ConfigError(f"target token outside [0, {K})")
    for ex in music:
        if len(ex.audio) != len(ex.tokens):
            raise ConfigError(f"music conditioning length {len(ex.audio)} != target length {len(ex.tokens)}")
    for ex in text:
        if len(ex.text_ids) != MAX_TEXT_LEN:
            raise ConfigError(f"text conditioning must have length {MAX_TEXT_LEN}")


def train_xmodal(music: Sequence[MusicExample], text: Sequence[TextExample], cfg: XModalConfig,
                 hp: XmTrainConfig, resume: str | None = None, vq_d: int = 0,
                 on_step: Callable[[dict[str, float]], None] | None = None) -> XmTrainResult:
    """Teacher-forced next-token training, strictly alternating music/text steps.

    Even steps train the music branch and odd steps the text branch. A branch
    weight of 0 still logs that branch's loss but skips its update.
    """
    _check_examples(music, text, cfg.K)
    usage = np.zeros(cfg.K, dtype=np.int64)
    for ex in list(music) + list(text):
        np.add.at(usage, np.asarray(ex.tokens, dtype=np.int64), 1)

    start = 0
    if resume:
        rhp, tensors = load_checkpoint(resume)
        model = XModalModel.from_checkpoint(rhp, tensors)
        opt = Adam(model.params, lr=hp.lr)
        restore_adam(opt, rhp, tensors, prefix="xm.")
        start = int(rhp["train.step"])
    else:
        model = XModalModel(cfg, seed=hp.seed)
        opt = Adam(model.params, lr=hp.lr)

    result = XmTrainResult(model, [], opt, usage, vq_d=vq_d, step=start)
    for step in range(start, hp.steps):
        branch = BRANCHES[step % 2]
        examples = music if branch == "music" else text
        weight = hp.music_weight if branch == "music" else hp.text_weight
        rng = make_rng(hp.seed, "batch", step)
        batch = make_batch(branch, examples, _pick(len(examples), hp.batch_size, rng),
                           hp.max_tokens, cfg.bos, rng)
        if weight == 0:
            with no_grad():
                loss = branch_loss(model, branch, batch)
        else:
            opt.zero_grad()
            loss = branch_loss(model, branch, batch)
            (loss * weight).backward()
            opt.step()
        row = {"step": step + 1, "branch": branch, "loss": loss.item()}
        result.log_rows.append(row)
        if on_step:
            on_step(row)
        if (step + 1) % 100 == 0:
            log.info("step %d %s loss %.4f", step + 1, branch, row["loss"])
    result.step = hp.steps
    return result


def teacher_forced_accuracy(model: XModalModel, branch: str, examples: Sequence,
                            max_tokens: int = 96) -> float:
    """Fraction of target positions where the argmax prediction is correct."""
    rng = make_rng(0, "eval")
    hit = total = 0
    with no_grad():
        for i in range(len(examples)):
            inputs, targets, mask, cond, valid = make_batch(branch, examples, np.array([i]),
                                                            max_tokens, model.cfg.bos, rng)
            feats, valid = _condition(model, branch, cond, valid)
            pred = model.decoder_forward(inputs, feats, valid).data.argmax(-1)
            hit += int(((pred == targets) & mask).sum())
            total += int(mask.sum())
    return hit / total


def save_xmodal_checkpoint(path, result: XmTrainResult, hp: XmTrainConfig) -> None:
    ahp, at = adam_state(result.optimizer, "xm.")
    model = result.model
    hps = {**model.hp(), **ahp, "xm.vq_K": model.cfg.K, "xm.vq_d": result.vq_d,
           **{f"train.{k}": v for k, v in asdict(hp).items() if k != "steps"}}
    tensors = {**model.state_tensors(), **at, "xm.train_usage": result.train_usage.astype(np.float64)}
    save_checkpoint(path, hps, tensors)


def load_xmodal(path) -> tuple[XModalModel, dict[str, str], np.ndarray]:
    """Model, raw hyperparameters and the training token-usage counts."""
    hp, tensors = load_checkpoint(path)
    model = XModalModel.from_checkpoint(hp, tensors)
    usage = tensors.get("xm.train_usage", np.ones(model.cfg.K)).astype(np.int64)
    return model, hp, usage


def train_config_from_hp(hp: dict[str, str]) -> dict[str, object]:
    return {f.name: type(f.default)(hp[f"train.{f.name}"]) for f in fields(XmTrainConfig)
            if f"train.{f.name}" in hp and f.name != "steps"}
