"""Stacked Kronecker product layer.

The weight matrix is a sum of Kronecker products ``sum_k A_k (x) B_k`` and is
never materialized.  With ``x`` reshaped row-major to ``[n1, n2]``,
``(A (x) B) x`` equals ``A X B^T`` flattened row-major.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .tensor import Tensor


def balanced_divisor(m: int) -> int:
    """Largest divisor of ``m`` not exceeding ``ceil(sqrt(m))``."""
    limit = math.isqrt(m - 1) + 1 if m > 1 else 1
    for d in range(min(limit, m), 0, -1):
        if m % d == 0:
            return d
    return 1


def choose_factor_shapes(m: int, n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    if m < 1 or n < 1:
        raise ConfigError(f"factor shapes need m, n >= 1, got {m}, {n}")
    m1, n1 = balanced_divisor(m), balanced_divisor(n)
    return (m1, n1), (m // m1, n // n1)


def is_degenerate(m: int, n: int) -> bool:
    """True when an axis factors trivially (prime or 1), leaving B with that whole axis."""
    (m1, n1), _ = choose_factor_shapes(m, n)
    return m1 == 1 or n1 == 1


@dataclass
class KronFactors:
    a: list[Tensor]
    b: list[Tensor]
    bias: Tensor

    def __post_init__(self):
        if not self.a or len(self.a) != len(self.b):
            raise ConfigError("need at least one (A, B) term and matching counts")
        m, n = self.out_features, self.in_features
        for a, b in zip(self.a, self.b):
            if a.shape[0] * b.shape[0] != m or a.shape[1] * b.shape[1] != n:
                raise DimensionError(f"term shapes {a.shape} (x) {b.shape} do not give [{m}, {n}]")

    @property
    def out_features(self) -> int:
        return self.a[0].shape[0] * self.b[0].shape[0]

    @property
    def in_features(self) -> int:
        return self.a[0].shape[1] * self.b[0].shape[1]

    @property
    def depth(self) -> int:
        return len(self.a)

    @classmethod
    def init(cls, m: int, n: int, rng: np.random.Generator, depth: int = 2, dtype=np.float64) -> "KronFactors":
        if depth < 1:
            raise ConfigError(f"stack depth must be >= 1, got {depth}")
        (m1, n1), (m2, n2) = choose_factor_shapes(m, n)
        a, b = [], []
        for _ in range(depth):
            a.append(Tensor(rng.uniform(-1, 1, size=(m1, n1)) / math.sqrt(n1), requires_grad=True, dtype=dtype))
            b.append(Tensor(rng.uniform(-1, 1, size=(m2, n2)) / math.sqrt(n2), requires_grad=True, dtype=dtype))
        return cls(a, b, Tensor(np.zeros(m), requires_grad=True, dtype=dtype))

    def named(self) -> dict[str, Tensor]:
        out = {}
        for k, (a, b) in enumerate(zip(self.a, self.b)):
            out[f"a{k}"] = a
            out[f"b{k}"] = b
        out["bias"] = self.bias
        return out

    def materialize(self) -> np.ndarray:
        return sum(np.kron(a.data, b.data) for a, b in zip(self.a, self.b))


def skpl_forward(x: Tensor, f: KronFactors) -> Tensor:
    n = f.in_features
    if x.shape[-1] != n:
        raise DimensionError(f"skpl input width {x.shape[-1]} != {n}")
    lead = x.shape[:-1]
    n1, n2 = f.a[0].shape[1], f.b[0].shape[1]
    xm = x.reshape(*lead, n1, n2)
    y = None
    for a, b in zip(f.a, f.b):
        term = a @ xm @ b.T
        y = term if y is None else y + term
    return y.reshape(*lead, f.out_features) + f.bias


def skpl_param_count(f: KronFactors) -> int:
    return sum(a.size + b.size for a, b in zip(f.a, f.b)) + f.bias.size


def factor_param_count(m: int, n: int, depth: int) -> int:
    (m1, n1), (m2, n2) = choose_factor_shapes(m, n)
    return depth * (m1 * n1 + m2 * n2) + m


def dense_param_count(m: int, n: int) -> int:
    return m * n + m
