from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Sequence

import numpy as np

from ..checkpoint import load_checkpoint
from ..data.synth import corpus_windows
from ..data.types import Corpus
from ..numerics import Adam, make_rng, no_grad
from .model import VqVaeConfig, VqVaeModel, decode, decode_tokens, encode, forward, quantize

log = logging.getLogger(__name__)


@dataclass
class VqTrainConfig:
    lr: float = 1e-4
    batch_size: int = 128
    steps: int = 5000
    seed: int = 0
    window: int = 64
    stride: int = 16
    epoch_steps: int = 0        # 0: one pass over the pooled windows
    probe_windows: int = 256    # per corpus, tokenized at each epoch end


@dataclass
class VqTrainResult:
    model: VqVaeModel
    log_rows: list[dict[str, float]]
    token_dumps: list[dict[str, np.ndarray]] = field(default_factory=list)
    step: int = 0
    optimizer: Adam | None = None


def _pool(corpora: Sequence[Corpus], window: int, stride: int) -> tuple[np.ndarray, list[str], np.ndarray]:
    chunks, tags, owner = [], [], []
    for c in corpora:
        w = corpus_windows(c, window, stride)
        chunks.append(w)
        tags.append(c.tag)
        owner.append(np.full(len(w), len(tags) - 1))
    return np.concatenate(chunks), tags, np.concatenate(owner)


def train_vqvae(corpora: Sequence[Corpus], cfg: VqVaeConfig, hp: VqTrainConfig,
                resume: str | None = None,
                on_step: Callable[[dict[str, float]], None] | None = None) -> VqTrainResult:
    """Train on 64-frame windows pooled uniformly across every corpus.

    Batches are drawn from ``make_rng(seed, "batch", step)`` so a resumed run
    replays the same batches as an uninterrupted one.
    """
    corpora = [c for c in corpora if len(c)]
    if not corpora:
        raise ValueError("train_vqvae needs at least one non-empty corpus")
    windows, tags, owner = _pool(corpora, hp.window, hp.stride)
    if len(set(tags)) != len(tags):
        raise ValueError(f"corpus tags must be distinct, got {tags}")

    start = 0
    if resume:
        rhp, tensors = load_checkpoint(resume)
        model = VqVaeModel.from_checkpoint(rhp, tensors)
        opt = Adam(model.params, lr=hp.lr)
        restore_adam(opt, rhp, tensors, prefix="vq.")
        start = int(rhp["train.step"])
    else:
        model = VqVaeModel(cfg, seed=hp.seed)
        model.set_normalization(windows)
        opt = Adam(model.params, lr=hp.lr)

    epoch_steps = hp.epoch_steps or max(1, -(-len(windows) // hp.batch_size))
    probe_rng = make_rng(hp.seed, "probe")
    probes = {}
    for i, tag in enumerate(tags):
        idx = np.nonzero(owner == i)[0]
        take = probe_rng.permutation(idx)[:hp.probe_windows]
        probes[tag] = windows[np.sort(take)]

    result = VqTrainResult(model, [], step=start, optimizer=opt)
    for step in range(start, hp.steps):
        rng = make_rng(hp.seed, "batch", step)
        batch = windows[rng.integers(0, len(windows), size=hp.batch_size)]
        opt.zero_grad()
        loss, parts, _ = forward(model, batch)
        loss.backward()
        opt.step()
        row = {"step": step + 1, "loss": loss.item(), **parts}
        result.log_rows.append(row)
        if on_step:
            on_step(row)
        if (step + 1) % epoch_steps == 0:
            dump = {tag: tokenize_windows(model, w) for tag, w in probes.items()}
            for tag, toks in dump.items():
                model.record_usage(tag, toks)
            result.token_dumps.append(dump)
            log.info("epoch %d step %d loss %.4f recon %.4f used %s", (step + 1) // epoch_steps, step + 1,
                     row["loss"], row["recon"],
                     {t: int((c > 0).sum()) for t, c in model.usage_counts.items()})
    result.step = hp.steps
    return result


def tokenize_windows(model: VqVaeModel, windows: np.ndarray) -> np.ndarray:
    with no_grad():
        return quantize(encode(model, windows), model.codebook)[1]


def tokenize_corpus(model: VqVaeModel, corpus: Corpus, record: bool = True) -> list[np.ndarray]:
    """Token sequence per item; motions are truncated to a multiple of 8 frames."""
    ds = model.cfg.downsample
    out = []
    with no_grad():
        for item in corpus:
            T = (item.motion.T // ds) * ds
            if T == 0:
                out.append(np.zeros(0, dtype=np.int64))
                continue
            toks = quantize(encode(model, item.motion.frames[:T]), model.codebook)[1]
            out.append(toks)
            if record:
                model.record_usage(corpus.tag, toks)
    return out


def validation_l1(model: VqVaeModel, windows: np.ndarray, batch: int = 256) -> float:
    """Mean absolute reconstruction error per element through the quantizer."""
    total = 0.0
    with no_grad():
        for i in range(0, len(windows), batch):
            w = windows[i:i + batch]
            z_q, _ = quantize(encode(model, w), model.codebook)
            total += np.abs(decode(model, z_q).data - w).sum()
    return float(total / windows.size)


def sequence_l1(model: VqVaeModel, corpus: Corpus, tokens: Sequence[np.ndarray]) -> float:
    num = den = 0.0
    for item, toks in zip(corpus, tokens):
        if len(toks) == 0:
            continue
        rec = decode_tokens(model, toks).frames
        num += np.abs(rec - item.motion.frames[:len(rec)]).sum()
        den += rec.size
    return num / den


# -- optimizer persistence shared by both training stages -------------------


def adam_state(opt: Adam, prefix: str) -> tuple[dict[str, object], dict[str, np.ndarray]]:
    st = opt.state
    hp = {"train.step": st.step_count, "adam.lr": st.lr, "adam.beta1": st.beta1,
          "adam.beta2": st.beta2, "adam.eps": st.eps}
    tensors = {}
    for k, m in st.first_moment.items():
        tensors[f"adam.m.{prefix}{k}"] = m
        tensors[f"adam.v.{prefix}{k}"] = st.second_moment[k]
    return hp, tensors


def restore_adam(opt: Adam, hp: dict[str, str], tensors: dict[str, np.ndarray], prefix: str) -> None:
    st = opt.state
    st.step_count = int(hp["train.step"])
    for k in opt.params:
        key = f"adam.m.{prefix}{k}"
        if key in tensors:
            st.first_moment[k] = tensors[key].copy()
            st.second_moment[k] = tensors[f"adam.v.{prefix}{k}"].copy()


def save_training_checkpoint(path, result: VqTrainResult, hp: VqTrainConfig) -> None:
    ahp, at = adam_state(result.optimizer, "vq.")
    extra = {**ahp, **{f"train.{k}": v for k, v in asdict(hp).items() if k != "steps"}}
    result.model.save(path, extra_hp=extra, extra_tensors=at)


def train_config_from_hp(hp: dict[str, str]) -> dict[str, object]:
    return {f.name: type(f.default)(hp[f"train.{f.name}"]) for f in fields(VqTrainConfig)
            if f"train.{f.name}" in hp and f.name != "steps"}
