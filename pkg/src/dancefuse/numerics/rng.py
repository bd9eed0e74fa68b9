"""Seeded generators.

All randomness in the package goes through :func:`make_rng`. Generators are
PCG64 streams keyed by ``(seed, *stream)`` so that, for example, the batch
drawn at training step ``s`` depends only on ``(seed, "batch", s)``. That
keeps resumed runs bit-identical to uninterrupted ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def make_rng(seed: int, *stream) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key(p) for p in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
