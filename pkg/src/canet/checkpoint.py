"""``CANET1`` checkpoint files.

Layout (all integers little-endian uint32)::

    b"CANET1"
    config_len, config JSON (UTF-8)
    tensor_count
    per tensor, sorted by name:
        name_len, name (UTF-8), ndim, dims..., data (little-endian float32, C order)

Values are stored as float32, so a 64-bit model is rounded on save.
"""
from __future__ import annotations

import io
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError
from .model import CANet, ModelConfig

MAGIC = b"CANET1"


def dumps(model: CANet) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    cfg = json.dumps(model.config.to_dict(), sort_keys=True).encode()
    buf.write(struct.pack("<I", len(cfg)))
    buf.write(cfg)
    state = model.state()
    buf.write(struct.pack("<I", len(state)))
    for name in sorted(state):
        arr = np.ascontiguousarray(state[name], dtype="<f4")
        raw = name.encode()
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    return buf.getvalue()


def save(model: CANet, path: str | os.PathLike) -> None:
    Path(path).write_bytes(dumps(model))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError(f"truncated checkpoint: wanted {n} bytes at offset {self.pos}")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def parse(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    r = _Reader(blob)
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError("bad magic: not a CANET1 checkpoint")
    try:
        cfg = json.loads(r.take(r.u32()).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt config block: {exc}") from exc
    state: dict[str, np.ndarray] = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode()
        ndim = r.u32()
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        state[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).copy()
    if r.pos != len(blob):
        raise CheckpointError(f"{len(blob) - r.pos} trailing bytes after tensor table")
    return cfg, state


def load(path: str | os.PathLike, config: ModelConfig | None = None) -> CANet:
    """Rebuild a model from ``path``.

    If ``config`` is given it must match the stored configuration exactly.
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    cfg_dict, state = parse(blob)
    stored = ModelConfig.from_dict(cfg_dict)
    if config is not None and config.to_dict() != stored.to_dict():
        diff = {k: (v, cfg_dict.get(k)) for k, v in config.to_dict().items() if cfg_dict.get(k) != v}
        raise CheckpointError(f"checkpoint config does not match requested config: {diff}")
    model = CANet(stored)
    try:
        model.load_state(state)
    except ConfigError as exc:
        raise CheckpointError(str(exc)) from exc
    return model
