"""Codebook usage diagnostics across two corpora."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class UsageStats:
    total_K: int
    used_a: int
    used_b: int
    shared: int
    pct_a: float
    pct_b: float
    histogram_a: np.ndarray
    histogram_b: np.ndarray

    @property
    def shared_ids(self) -> np.ndarray:
        return np.flatnonzero((self.histogram_a > 0) & (self.histogram_b > 0))


def _counts(seqs: Sequence, K: int) -> np.ndarray:
    counts = np.zeros(K, dtype=np.int64)
    for s in seqs:
        t = np.asarray(s, dtype=np.int64).ravel()
        if t.size == 0:
            continue
        if t.min() < 0 or t.max() >= K:
            raise IndexError(f"token outside [0, {K})")
        np.add.at(counts, t, 1)
    return counts


def _normalize(c: np.ndarray) -> np.ndarray:
    total = c.sum()
    return c / total if total else np.zeros(len(c))


def stats_from_counts(counts_a: np.ndarray, counts_b: np.ndarray) -> UsageStats:
    K = len(counts_a)
    ua, ub = counts_a > 0, counts_b > 0
    used_a, used_b, shared = int(ua.sum()), int(ub.sum()), int((ua & ub).sum())
    return UsageStats(
        total_K=K, used_a=used_a, used_b=used_b, shared=shared,
        pct_a=100.0 * shared / used_a if used_a else 0.0,
        pct_b=100.0 * shared / used_b if used_b else 0.0,
        histogram_a=_normalize(counts_a), histogram_b=_normalize(counts_b),
    )


def usage_stats(tokens_a: Sequence, tokens_b: Sequence, K: int) -> UsageStats:
    """Used/shared counts and frame-normalized histograms for two token corpora."""
    return stats_from_counts(_counts(tokens_a, K), _counts(tokens_b, K))


@dataclass
class UsageSeries:
    cumulative: list[UsageStats]
    per_epoch: list[UsageStats]


def usage_over_epochs(dumps: Sequence[dict[str, np.ndarray]], tag_a: str, tag_b: str, K: int) -> UsageSeries:
    """Usage per epoch from training token dumps, both cumulative and per epoch."""
    cum_a = np.zeros(K, dtype=np.int64)
    cum_b = np.zeros(K, dtype=np.int64)
    cumulative, per_epoch = [], []
    for dump in dumps:
        ca, cb = _counts([dump[tag_a]], K), _counts([dump[tag_b]], K)
        cum_a += ca
        cum_b += cb
        per_epoch.append(stats_from_counts(ca, cb))
        cumulative.append(stats_from_counts(cum_a.copy(), cum_b.copy()))
    return UsageSeries(cumulative, per_epoch)


def pca_2d(codebook: np.ndarray, ids: np.ndarray | None = None) -> np.ndarray:
    """Project codebook rows (optionally a subset) onto their top two principal axes."""
    x = np.asarray(codebook, dtype=np.float64)
    if ids is not None:
        x = x[np.asarray(ids, dtype=np.int64)]
    if len(x) < 2:
        return np.zeros((len(x), 2))
    x = x - x.mean(0)
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    out = np.zeros((len(x), 2))
    r = min(2, vt.shape[0])
    out[:, :r] = x @ vt[:r].T
    return out


def write_usage_csv(path, stats: UsageStats, tag_a: str = "a", tag_b: str = "b") -> None:
    """Summary ``#`` comment lines, then ``token_id,freq_a,freq_b`` for every code."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# corpus_a={tag_a} corpus_b={tag_b} K={stats.total_K}\n")
        f.write(f"# used_a={stats.used_a} used_b={stats.used_b} shared={stats.shared} "
                f"pct_a={stats.pct_a:.4f} pct_b={stats.pct_b:.4f}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["token_id", "freq_a", "freq_b"])
        for k in range(stats.total_K):
            w.writerow([k, repr(float(stats.histogram_a[k])), repr(float(stats.histogram_b[k]))])


def write_series_csv(path, series: UsageSeries) -> None:
    path = Path(path)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["epoch", "cum_used_a", "cum_used_b", "cum_shared", "epoch_used_a", "epoch_used_b",
                    "epoch_shared"])
        for e, (c, p) in enumerate(zip(series.cumulative, series.per_epoch), start=1):
            w.writerow([e, c.used_a, c.used_b, c.shared, p.used_a, p.used_b, p.shared])


def read_usage_csv(path) -> tuple[dict[str, str], np.ndarray]:
    """Summary fields and the ``(K, 2)`` frequency table."""
    summary, rows = {}, []
    with open(path) as f:
        for line in f:
            if line.startswith("#"):
                for part in line[1:].split():
                    k, v = part.split("=", 1)
                    summary[k] = v
            elif line.startswith("token_id"):
                continue
            elif line.strip():
                _, a, b = line.strip().split(",")
                rows.append((float(a), float(b)))
    return summary, np.array(rows)
