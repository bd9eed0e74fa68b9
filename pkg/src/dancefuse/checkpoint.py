"""``TM2DCKPT v1`` checkpoint files.

Layout::

    TM2DCKPT v1
    [hp]
    key=value              (one per line)
    [tensors] <count>
    <name> <rank> <extent...>
    <prod(extents) little-endian float64 values>
    ...

Names must not contain whitespace.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

MAGIC = b"TM2DCKPT v1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, hp: dict[str, object], tensors: dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC + b"\n[hp]\n")
        for k, v in hp.items():
            s = str(v)
            if "\n" in s or "=" in k:
                raise CheckpointError(f"hyperparameter {k!r} cannot be serialized")
            f.write(f"{k}={s}\n".encode())
        f.write(f"[tensors] {len(tensors)}\n".encode())
        for name, arr in tensors.items():
            a = np.asarray(arr, dtype="<f8")
            if any(c.isspace() for c in name):
                raise CheckpointError(f"tensor name {name!r} contains whitespace")
            f.write(" ".join([name, str(a.ndim)] + [str(n) for n in a.shape]).encode() + b"\n")
            f.write(np.ascontiguousarray(a).tobytes())
    tmp.replace(path)


def load_checkpoint(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        if f.readline().rstrip(b"\n") != MAGIC:
            raise CheckpointError(f"{path}: not a {MAGIC.decode()} checkpoint")
        if f.readline().strip() != b"[hp]":
            raise CheckpointError(f"{path}: missing [hp] block")
        hp: dict[str, str] = {}
        while True:
            line = f.readline()
            if not line:
                raise CheckpointError(f"{path}: truncated before [tensors]")
            line = line.decode().rstrip("\n")
            if line.startswith("[tensors]"):
                count = int(line.split()[1])
                break
            k, v = line.split("=", 1)
            hp[k] = v
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            parts = f.readline().decode().split()
            name, rank = parts[0], int(parts[1])
            shape = tuple(int(x) for x in parts[2:2 + rank])
            n = int(np.prod(shape)) if shape else 1
            buf = f.read(8 * n)
            if len(buf) != 8 * n:
                raise CheckpointError(f"{path}: truncated tensor {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(np.float64)
    return hp, tensors
