"""Differentiable primitives used by the models: convolution, normalization,
masked softmax, fused cross-entropy and the straight-through estimator."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, as_tensor


class SequenceTooShortError(ValueError):
    pass


def conv1d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0,
           bias: Tensor | None = None) -> Tensor:
    """Cross-correlation along time.

    Args:
        x: ``(T, c_in)`` or ``(B, T, c_in)``.
        kernel: ``(w, c_in, c_out)``.
        stride: temporal step between output frames.
        padding: zeros added symmetrically on both ends of the time axis.
        bias: optional ``(c_out,)``.

    Returns:
        ``(T', c_out)`` (or batched) with ``T' = (T + 2*padding - w) // stride + 1``.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    unbatched = x.ndim == 2
    xd = x.data[None] if unbatched else x.data
    w, c_in, c_out = kernel.shape
    if xd.shape[-1] != c_in:
        raise ShapeError(f"conv1d channel mismatch: input {x.shape}, kernel {kernel.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    B, T, _ = xd.shape
    if T + 2 * padding < w:
        raise SequenceTooShortError(f"sequence length {T} (padding {padding}) shorter than kernel width {w}")
    xp = np.pad(xd, ((0, 0), (padding, padding), (0, 0))) if padding else xd
    t_out = (T + 2 * padding - w) // stride + 1
    # (B, T_out, c_in, w) -> (B, T_out, w, c_in)
    win = sliding_window_view(xp, w, axis=1)[:, ::stride][:, :t_out]
    cols = np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(B * t_out, w * c_in)
    k2 = kernel.data.reshape(w * c_in, c_out)
    out = (cols @ k2).reshape(B, t_out, c_out)
    if bias is not None:
        out = out + bias.data
    kshape = kernel.shape

    def backward(g):
        g = g[None] if unbatched else g
        g2 = g.reshape(B * t_out, c_out)
        gk = (cols.T @ g2).reshape(kshape)
        dcols = (g2 @ k2.T).reshape(B, t_out, w, c_in)
        dxp = np.zeros_like(xp)
        span = stride * (t_out - 1) + 1
        for j in range(w):
            dxp[:, j:j + span:stride] += dcols[:, :, j]
        dx = dxp[:, padding:padding + T] if padding else dxp
        if unbatched:
            dx = dx[0]
        gb = g2.sum(axis=0) if bias is not None else None
        return dx, gk, gb

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return Tensor._make(out[0] if unbatched else out, parents, backward, "conv1d")


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """Repeat every frame ``factor`` times along the time axis (axis -2)."""
    shape = x.shape

    def backward(g):
        g = g.reshape(shape[:-2] + (shape[-2], factor, shape[-1]))
        return (g.sum(axis=-2),)

    return Tensor._make(np.repeat(x.data, factor, axis=-2), (x,), backward, "upsample")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    gd = gamma.data

    def backward(g):
        gx_hat = g * gd
        dx = inv * (gx_hat - gx_hat.mean(axis=-1, keepdims=True)
                    - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True))
        red = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=red), g.sum(axis=red)

    return Tensor._make(xhat * gd + beta.data, (x, gamma, beta), backward, "layer_norm")


def masked_softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis with an additive mask (0 or -inf).

    Rows whose every entry is blocked return all zeros instead of NaN.
    """
    xd = x.data if mask is None else x.data + mask
    m = xd.max(axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(xd - m)
    denom = e.sum(axis=-1, keepdims=True)
    y = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return Tensor._make(y, (x,), backward, "softmax")


def log_softmax_np(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits: Tensor, targets, mask: np.ndarray | None = None) -> Tensor:
    """Mean of ``-log softmax(logits)[target]`` over valid positions.

    Args:
        logits: ``(..., C)``.
        targets: integer array matching ``logits.shape[:-1]``.
        mask: optional 0/1 weights of the same shape as ``targets``; the mean
            runs over positions with weight 1.
    """
    targets = np.asarray(targets, dtype=np.int64)
    C = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise ShapeError(f"targets shape {targets.shape} does not match logits {logits.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= C):
        raise IndexError(f"target out of range [0, {C})")
    lsm = log_softmax_np(logits.data)
    nll = -np.take_along_axis(lsm, targets[..., None], axis=-1)[..., 0]
    w = np.ones(targets.shape) if mask is None else np.asarray(mask, dtype=np.float64)
    count = w.sum()
    if count <= 0:
        raise ValueError("cross-entropy over zero valid positions")
    loss = (nll * w).sum() / count

    def backward(g):
        grad = np.exp(lsm)
        np.put_along_axis(grad, targets[..., None],
                          np.take_along_axis(grad, targets[..., None], axis=-1) - 1.0, axis=-1)
        return (grad * (w / count)[..., None] * g,)

    return Tensor._make(np.asarray(loss), (logits,), backward, "cross_entropy")


def straight_through(z: Tensor, z_q: np.ndarray) -> Tensor:
    """Forward returns ``z_q`` exactly; backward passes gradients to ``z`` unchanged."""
    z_q = np.asarray(z_q, dtype=np.float64)
    if z_q.shape != z.shape:
        raise ShapeError(f"straight_through shape mismatch {z.shape} vs {z_q.shape}")
    return Tensor._make(z_q.copy(), (z,), lambda g: (g,), "straight_through")
