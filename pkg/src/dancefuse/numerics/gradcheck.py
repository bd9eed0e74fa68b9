"""Finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


class ContractError(ValueError):
    pass


def grad_check(f: Callable[..., Tensor], inputs: Sequence[np.ndarray], step: float = 1e-5,
               floor: float = 1e-8, max_elements: int | None = None, seed: int = 0) -> float:
    """Max relative error between autodiff and central-difference gradients.

    ``f`` receives one ``Tensor`` per input and must return a scalar. The
    relative error of each element is ``|a - n| / max(|a|, |n|, floor)``.
    With ``max_elements`` set, larger inputs are checked on a random subset
    of that many entries.
    """
    arrays = [np.array(x, dtype=np.float64) for x in inputs]
    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = f(*leaves)
    if out.data.size != 1:
        raise ContractError(f"grad_check needs a scalar output, got shape {out.shape}")
    if out.requires_grad:
        out.backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i, a in enumerate(arrays):
        analytic = leaves[i].grad if leaves[i].grad is not None else np.zeros_like(a)
        numeric = np.zeros_like(a)
        flat = a.reshape(-1)
        picked = np.arange(flat.size)
        if max_elements is not None and flat.size > max_elements:
            picked = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
        for j in picked:
            orig = flat[j]
            flat[j] = orig + step
            hi = f(*[Tensor(x) for x in arrays]).item()
            flat[j] = orig - step
            lo = f(*[Tensor(x) for x in arrays]).item()
            flat[j] = orig
            numeric.reshape(-1)[j] = (hi - lo) / (2 * step)
        an, nu = analytic.reshape(-1)[picked], numeric.reshape(-1)[picked]
        err = np.abs(an - nu) / np.maximum(np.maximum(np.abs(an), np.abs(nu)), floor)
        worst = max(worst, float(err.max(initial=0.0)))
    return worst
