"""Interactive convolutional block: two parallel convolutions with cross gating."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .tensor import Tensor, conv1d, dropout, gelu

KERNEL_A = 1
KERNEL_B = 3


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, dtype=dtype)


@dataclass
class IcbParams:
    conv_a: Tensor
    bias_a: Tensor
    conv_b: Tensor
    bias_b: Tensor
    conv_out: Tensor
    bias_out: Tensor

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator, dtype=np.float64) -> "IcbParams":
        zeros = lambda: Tensor(np.zeros(dim), requires_grad=True, dtype=dtype)
        return cls(
            _uniform(rng, (dim, dim, KERNEL_A), dim * KERNEL_A, dtype),
            zeros(),
            _uniform(rng, (dim, dim, KERNEL_B), dim * KERNEL_B, dtype),
            zeros(),
            _uniform(rng, (dim, dim, 1), dim, dtype),
            zeros(),
        )

    def named(self) -> dict[str, Tensor]:
        return {
            "conv_a": self.conv_a,
            "bias_a": self.bias_a,
            "conv_b": self.conv_b,
            "bias_b": self.bias_b,
            "conv_out": self.conv_out,
            "bias_out": self.bias_out,
        }


def icb_forward(
    x: Tensor,
    params: IcbParams,
    dropout_p: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """``conv_out(gelu(a) * drop(b) + gelu(b) * drop(a)) + x`` over the patch axis.

    ``x`` is ``[M, N, D]``; convolutions run along N with D channels.
    """
    if x.ndim != 3 or x.shape[2] != params.conv_a.shape[1]:
        raise DimensionError(f"icb_forward got {x.shape} for width {params.conv_a.shape[1]}")
    xt = x.transpose(0, 2, 1)
    a = conv1d(xt, params.conv_a, params.bias_a)
    b = conv1d(xt, params.conv_b, params.bias_b)
    mixed = gelu(a) * dropout(b, dropout_p, training, rng) + gelu(b) * dropout(a, dropout_p, training, rng)
    y = conv1d(mixed, params.conv_out, params.bias_out)
    return y.transpose(0, 2, 1) + x
