"""Command-line entry point: ``dancefuse <command> [options]``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
runtime failures; every failure prints a single ``dancefuse: error:`` line.
"""

from __future__ import annotations

import argparse
import csv
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint
from .codebook import usage_over_epochs, usage_stats, write_series_csv, write_usage_csv
from .config import ConfigError, RunConfig
from .data import (
    FormatError,
    TooShortError,
    default_vocab,
    read_audio,
    read_corpus,
    read_tokens,
    synth_action_corpus,
    synth_dance_corpus,
    tokenize_text,
    write_corpus,
    write_motion,
    write_tokens,
)
from .fusion import CompatibilityError, GenerationRequest, RangeError, check_compatible, generate
from .metrics import evaluate_dirs
from .vqvae import (
    VqVaeModel,
    save_training_checkpoint,
    tokenize_corpus,
    train_vqvae,
)
from .xmodal import (
    MusicExample,
    TextExample,
    load_xmodal,
    save_xmodal_checkpoint,
    train_xmodal,
)

log = logging.getLogger("dancefuse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.override(seed=args.seed)
    return cfg


def _write_log(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _need(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


# -- commands ---------------------------------------------------------------


def cmd_gen_data(args) -> None:
    cfg = _config(args)
    n = args.n if args.n is not None else cfg.data_n
    make = synth_dance_corpus if args.kind == "dance" else synth_action_corpus
    corpus = make(n, cfg.seed)
    out = Path(args.out)
    manifest = write_corpus(out, corpus)
    cfg.override(data_n=n).write(out / "resolved.cfg")
    print(f"wrote {len(corpus)} {args.kind} items to {manifest}")


def cmd_train_vqvae(args) -> None:
    cfg = _config(args).override(vq_steps=args.steps)
    corpora = [read_corpus(_need(d, "corpus")) for d in (args.dance, args.action) if d]
    if not corpora:
        raise UsageError("give at least one of --dance / --action")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    item = corpora[0].items[0]
    vq_cfg = cfg.vq_config(d_m=item.motion.d_m, fps=item.motion.fps)
    hp = cfg.vq_train()
    res = train_vqvae(corpora, vq_cfg, hp, resume=args.resume)
    for c in corpora:
        tokenize_corpus(res.model, c, record=True)
    save_training_checkpoint(out / "vqvae.ckpt", res, hp)
    _write_log(out / "vqvae_log.csv", res.log_rows)
    if len(corpora) == 2 and res.token_dumps:
        series = usage_over_epochs(res.token_dumps, corpora[0].tag, corpora[1].tag, vq_cfg.K)
        write_series_csv(out / "usage_series.csv", series)
    cfg.write(out / "resolved.cfg")
    last = res.log_rows[-1] if res.log_rows else {}
    print(f"vqvae: {res.step} steps, final loss {last.get('loss', float('nan')):.5f} -> {out / 'vqvae.ckpt'}")


def _xm_examples(vq: VqVaeModel, dance, action):
    music, text = [], []
    for item, toks in zip(dance, tokenize_corpus(vq, dance, record=False)):
        if item.audio is None or len(toks) == 0:
            continue
        n = min(len(toks), item.audio.T)
        music.append(MusicExample(item.audio.features[:n], toks[:n]))
    for item, toks in zip(action, tokenize_corpus(vq, action, record=False)):
        if item.text is None or len(toks) == 0:
            continue
        text.append(TextExample(item.text.ids, toks))
    return music, text


def cmd_train_xmodal(args) -> None:
    cfg = _config(args).override(xm_steps=args.steps)
    vq = VqVaeModel.load(_need(args.ckpt_vq, "tokenizer checkpoint"))
    dance = read_corpus(_need(args.dance, "dance corpus"))
    action = read_corpus(_need(args.action, "action corpus"))
    music, text = _xm_examples(vq, dance, action)
    audio_dim = music[0].audio.shape[1] if music else 16
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hp = cfg.xm_train()
    res = train_xmodal(music, text, cfg.xm_config(vq.cfg.K, audio_dim), hp, resume=args.resume, vq_d=vq.cfg.d)
    save_xmodal_checkpoint(out / "xmodal.ckpt", res, hp)
    _write_log(out / "xmodal_log.csv", res.log_rows)
    cfg.write(out / "resolved.cfg")
    print(f"xmodal: {res.step} steps on {len(music)} music / {len(text)} text pairs -> {out / 'xmodal.ckpt'}")


def cmd_generate(args) -> None:
    cfg = _config(args)
    if args.top_k is not None:
        cfg = cfg.override(gen_top_k=args.top_k)
    if args.fusion_level is not None:
        cfg = cfg.override(gen_fusion_level=args.fusion_level)
    vq = VqVaeModel.load(_need(args.ckpt_vq, "tokenizer checkpoint"))
    xm, xm_hp, usage = load_xmodal(_need(args.ckpt_xm, "transformer checkpoint"))
    try:
        check_compatible(xm, vq, int(xm_hp.get("xm.vq_d", 0)))
    except CompatibilityError as e:
        raise CompatibilityError(f"version error: {e}") from None
    audio = read_audio(_need(args.audio, "audio"))
    text = schedule = None
    if args.text:
        if args.text_start is None or args.text_duration is None:
            raise UsageError("--text needs --text-start and --text-duration")
        text = tokenize_text(args.text, default_vocab())
        schedule = cfg.schedule(args.text_start, args.text_duration)
    req = GenerationRequest(audio=audio, text=text, schedule=schedule, top_k=cfg.gen_top_k,
                            seed=cfg.seed, fusion_level=cfg.gen_fusion_level)
    res = generate(xm, vq, req, usage)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_motion(prefix.with_suffix(".tmot"), res.motion)
    write_tokens(prefix.with_suffix(".ttok"), res.tokens, vq.cfg.K)
    shutil.copyfile(args.audio, prefix.with_suffix(".taud"))
    side = cfg.to_text()
    side += f"text={args.text or ''}\n"
    side += f"text_start={args.text_start if args.text else -1}\n"
    side += f"text_duration={args.text_duration if args.text else 0}\n"
    prefix.with_suffix(".config").write_text(side)
    print(f"generated {len(res.tokens)} tokens / {res.motion.T} frames -> {prefix.with_suffix('.tmot')}")


def cmd_evaluate(args) -> None:
    cfg = _config(args)
    gen = _need(args.generated, "generated directory")
    ref = _need(args.reference, "reference directory")
    report = evaluate_dirs(gen, ref, args.mpd_ref, cfg.eval_params())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_text())
    out.with_suffix(".csv").write_text(report.to_csv())
    print(" ".join(f"{k}={v:.4g}" for k, v in report.metrics.items()))


def _token_sets(src: Path, vq: VqVaeModel) -> tuple[list[np.ndarray], str]:
    if (src / "manifest.tsv").exists() or src.suffix == ".tsv":
        corpus = read_corpus(src)
        return tokenize_corpus(vq, corpus, record=False), corpus.tag
    files = sorted(src.glob("*.ttok"))
    if not files:
        raise FileNotFoundError(f"{src}: neither a corpus manifest nor .ttok files")
    seqs = []
    for f in files:
        toks, K = read_tokens(f)
        if K != vq.cfg.K:
            raise CompatibilityError(f"{f}: tokens use K={K}, checkpoint has K={vq.cfg.K}")
        seqs.append(toks)
    return seqs, src.name


def cmd_codebook_stats(args) -> None:
    vq = VqVaeModel.load(_need(args.ckpt, "tokenizer checkpoint"))
    ta, tag_a = _token_sets(_need(args.corpus_a, "corpus"), vq)
    tb, tag_b = _token_sets(_need(args.corpus_b, "corpus"), vq)
    stats = usage_stats(ta, tb, vq.cfg.K)
    write_usage_csv(args.out, stats, tag_a, tag_b)
    print(f"K={stats.total_K} used {stats.used_a}/{stats.used_b} shared {stats.shared} "
          f"({stats.pct_a:.1f}% / {stats.pct_b:.1f}%) -> {args.out}")


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dancefuse", description="Music/text-conditioned dance generation toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="synthesize a dance or action corpus")
    g.add_argument("--kind", choices=("dance", "action"), required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen_data)

    v = sub.add_parser("train-vqvae", help="train the motion tokenizer")
    v.add_argument("--config")
    v.add_argument("--dance")
    v.add_argument("--action")
    v.add_argument("--out", required=True)
    v.add_argument("--steps", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--resume")
    v.set_defaults(func=cmd_train_vqvae)

    x = sub.add_parser("train-xmodal", help="train the cross-modal transformer")
    x.add_argument("--config")
    x.add_argument("--ckpt-vq", required=True)
    x.add_argument("--dance", required=True)
    x.add_argument("--action", required=True)
    x.add_argument("--out", required=True)
    x.add_argument("--steps", type=int)
    x.add_argument("--seed", type=int)
    x.add_argument("--resume")
    x.set_defaults(func=cmd_train_xmodal)

    e = sub.add_parser("generate", help="generate motion from music and optional text")
    e.add_argument("--config")
    e.add_argument("--ckpt-vq", required=True)
    e.add_argument("--ckpt-xm", required=True)
    e.add_argument("--audio", required=True)
    e.add_argument("--text")
    e.add_argument("--text-start", type=float)
    e.add_argument("--text-duration", type=float)
    e.add_argument("--top-k", type=int)
    e.add_argument("--fusion-level", choices=("feature", "logit"))
    e.add_argument("--seed", type=int)
    e.add_argument("--out", required=True, help="output prefix")
    e.set_defaults(func=cmd_generate)

    m = sub.add_parser("evaluate", help="compute the metric report")
    m.add_argument("--config")
    m.add_argument("--generated", required=True)
    m.add_argument("--reference", required=True)
    m.add_argument("--mpd-ref")
    m.add_argument("--seed", type=int)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("codebook-stats", help="codebook usage across two corpora")
    c.add_argument("--ckpt", required=True)
    c.add_argument("--corpus-a", required=True)
    c.add_argument("--corpus-b", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_codebook_stats)
    return p


RUNTIME_ERRORS = (OSError, ValueError, IndexError, KeyError, FloatingPointError, CheckpointError,
                  FormatError, TooShortError, RangeError, CompatibilityError)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"dancefuse: usage error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"dancefuse: usage error: {e}", file=sys.stderr)
        return 1
    except RUNTIME_ERRORS as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"dancefuse: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
