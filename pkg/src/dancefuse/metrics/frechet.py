from __future__ import annotations

from typing import Sequence

import numpy as np

from ..numerics import make_rng
from ..numerics.tensor import ShapeError

NEG_EIG_TOL = 1e-8


def _sqrt_psd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.T) / 2)
    w = _clamp(w, a)
    return (v * np.sqrt(w)) @ v.T


def _clamp(w: np.ndarray, ref: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.abs(ref).max(initial=0.0)))
    if w.min(initial=0.0) < -NEG_EIG_TOL * scale:
        raise FloatingPointError(f"matrix square root: eigenvalue {w.min():.3e} is not PSD")
    return np.maximum(w, 0.0)


def frechet_distance(mu_a, cov_a, mu_b, cov_b) -> float:
    """Fréchet distance between two Gaussians.

    ``Tr((cov_a cov_b)^{1/2})`` is computed from the eigenvalues of the
    symmetric product ``cov_a^{1/2} cov_b cov_a^{1/2}``.
    """
    mu_a, mu_b = np.atleast_1d(mu_a).astype(np.float64), np.atleast_1d(mu_b).astype(np.float64)
    cov_a, cov_b = np.atleast_2d(cov_a).astype(np.float64), np.atleast_2d(cov_b).astype(np.float64)
    if mu_a.shape != mu_b.shape or cov_a.shape != cov_b.shape or cov_a.shape != (mu_a.size,) * 2:
        raise ShapeError(f"Fréchet shapes disagree: mu {mu_a.shape}/{mu_b.shape}, cov {cov_a.shape}/{cov_b.shape}")
    try:
        sa = _sqrt_psd(cov_a)
        inner = sa @ cov_b @ sa
        w = np.linalg.eigvalsh((inner + inner.T) / 2)
    except np.linalg.LinAlgError as e:
        raise FloatingPointError(f"matrix square root did not converge: {e}") from e
    tr_sqrt = np.sqrt(_clamp(w, inner)).sum()
    diff = mu_a - mu_b
    d = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * tr_sqrt)
    return max(d, 0.0)


def fid(set_a: Sequence[np.ndarray], set_b: Sequence[np.ndarray]) -> float:
    """Fréchet distance between Gaussian fits of two feature sets."""
    a = np.asarray(set_a, dtype=np.float64)
    b = np.asarray(set_b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"feature widths differ: {a.shape[1]} vs {b.shape[1]}")
    if len(a) < 2 or len(b) < 2:
        raise ValueError("fid needs at least 2 vectors per set")
    return frechet_distance(a.mean(0), np.cov(a, rowvar=False), b.mean(0), np.cov(b, rowvar=False))


def diversity(vectors: Sequence[np.ndarray], n_pairs: int | None = None, seed: int = 0) -> float:
    """Mean Euclidean distance between distinct pairs.

    ``n_pairs=None`` averages over every unordered pair; otherwise that many
    pairs are drawn with a seeded generator.
    """
    x = np.asarray(vectors, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError("diversity needs at least 2 vectors")
    if n_pairs is None:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = make_rng(seed, "diversity")
        i = rng.integers(0, n, size=n_pairs)
        j = (i + rng.integers(1, n, size=n_pairs)) % n
    return float(np.linalg.norm(x[i] - x[j], axis=-1).mean())
