"""Multi-resolution patching and the dual (stream / internal style) embedding."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .tensor import Tensor, concat


def num_patches(look_back: int, patch: int) -> int:
    return math.ceil(look_back / patch)


def patchify(x: Tensor, p: int) -> Tensor:
    """Split ``[B, C, L]`` into non-overlapping patches ``[B*C, N, p]``.

    Channels are folded into the batch axis.  When ``p`` does not divide
    ``L`` the series is left-padded by repeating its first value.
    """
    if x.ndim != 3:
        raise DimensionError(f"patchify expects [B, C, L], got {x.shape}")
    bsz, channels, length = x.shape
    if not 1 <= p <= length:
        raise ConfigError(f"patch size {p} must lie in [1, {length}]")
    n = num_patches(length, p)
    flat = x.reshape(bsz * channels, length)
    pad = n * p - length
    if pad:
        first = flat[:, 0:1]
        flat = concat([first] * pad + [flat], axis=1)
    return flat.reshape(bsz * channels, n, p)


@dataclass
class EmbedParams:
    w_stream: Tensor
    b_stream: Tensor
    w_style: Tensor
    b_style: Tensor

    @classmethod
    def init(cls, patch: int, dim: int, rng: np.random.Generator, dtype=np.float64) -> "EmbedParams":
        bound = 1.0 / math.sqrt(patch)

        def w():
            return Tensor(rng.uniform(-bound, bound, size=(patch, dim)), requires_grad=True, dtype=dtype)

        def b():
            return Tensor(rng.uniform(-bound, bound, size=(dim,)), requires_grad=True, dtype=dtype)

        return cls(w(), b(), w(), b())

    def named(self) -> dict[str, Tensor]:
        return {"w_stream": self.w_stream, "b_stream": self.b_stream, "w_style": self.w_style, "b_style": self.b_style}


@dataclass
class DualEmbedding:
    stream: Tensor
    internal_style: Tensor


def dual_embed(patches: Tensor, params: EmbedParams) -> DualEmbedding:
    """Two independent affine projections of the same ``[M, N, p]`` patches to width D."""
    if patches.shape[-1] != params.w_stream.shape[0]:
        raise DimensionError(f"patch width {patches.shape[-1]} != embedding input {params.w_stream.shape[0]}")
    stream = patches @ params.w_stream + params.b_stream
    style = patches @ params.w_style + params.b_style
    return DualEmbedding(stream, style)
