"""Non-stationary adaptive normalization (style blending gate + AdaIN) and baseline normalizers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, DimensionError
from .tensor import Tensor, matmul, reduce_stats, softplus

# Small enough that AdaIN reproduces its target statistics to ~1e-7.
NSAN_EPS = 1e-8
NORM_KINDS = ("layer", "batch", "instance")


@dataclass
class StyleStats:
    mu: Tensor
    sigma: Tensor

    def __post_init__(self):
        if self.mu.shape != self.sigma.shape:
            raise DimensionError(f"style mu {self.mu.shape} and sigma {self.sigma.shape} differ")


def instance_stats(x: Tensor, eps: float = NSAN_EPS) -> StyleStats:
    """Per-instance, per-feature statistics along the patch axis of ``[M, N, D]``."""
    mu, sigma = reduce_stats(x, axis=1, eps=eps)
    return StyleStats(mu, sigma)


def _uniform(rng, shape, fan_in, dtype) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, dtype=dtype)


@dataclass
class GateParams:
    w_mu_i: Tensor
    w_sigma_i: Tensor
    w_mu_e: Tensor
    w_sigma_e: Tensor
    shift_w: Tensor
    shift_b: Tensor
    scale_w: Tensor
    scale_b: Tensor
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"blend ratio must be in [0, 1], got {self.alpha}")

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator, alpha: float = 0.5, dtype=np.float64) -> "GateParams":
        return cls(
            *(_uniform(rng, (dim, dim), dim, dtype) for _ in range(4)),
            _uniform(rng, (dim, dim), dim, dtype),
            _uniform(rng, (dim,), dim, dtype),
            _uniform(rng, (dim, dim), dim, dtype),
            _uniform(rng, (dim,), dim, dtype),
            alpha=alpha,
        )

    @classmethod
    def identity(cls, dim: int, alpha: float = 0.5, dtype=np.float64) -> "GateParams":
        eye = lambda: Tensor(np.eye(dim), requires_grad=True, dtype=dtype)
        zero = lambda: Tensor(np.zeros(dim), requires_grad=True, dtype=dtype)
        return cls(eye(), eye(), eye(), eye(), eye(), zero(), eye(), zero(), alpha=alpha)

    def named(self) -> dict[str, Tensor]:
        return {
            "w_mu_i": self.w_mu_i,
            "w_sigma_i": self.w_sigma_i,
            "w_mu_e": self.w_mu_e,
            "w_sigma_e": self.w_sigma_e,
            "shift_w": self.shift_w,
            "shift_b": self.shift_b,
            "scale_w": self.scale_w,
            "scale_b": self.scale_b,
        }


@dataclass
class BlendTrace:
    """Intermediate statistics of one gate evaluation, kept for inspection."""

    mu_i: Tensor
    sigma_i: Tensor
    mu_e: Tensor
    sigma_e: Tensor
    mu_blend: Tensor
    sigma_blend: Tensor


def blend(internal: StyleStats, external: StyleStats, g: GateParams) -> BlendTrace:
    """Learnable re-weighting followed by the convex blend of internal and external statistics."""
    if internal.mu.shape[-1] != g.w_mu_i.shape[0] or external.mu.shape[-1] != g.w_mu_e.shape[0]:
        raise DimensionError(f"gate width {g.w_mu_i.shape[0]} vs stats {internal.mu.shape}, {external.mu.shape}")
    mu_i = matmul(internal.mu, g.w_mu_i)
    sigma_i = matmul(internal.sigma, g.w_sigma_i)
    mu_e = matmul(external.mu, g.w_mu_e)
    sigma_e = matmul(external.sigma, g.w_sigma_e)
    a = g.alpha
    return BlendTrace(mu_i, sigma_i, mu_e, sigma_e, mu_i * a + mu_e * (1 - a), sigma_i * a + sigma_e * (1 - a))


def style_blending_gate(internal: StyleStats, external: StyleStats, g: GateParams, eps: float = NSAN_EPS) -> StyleStats:
    """Blend and then shift/scale; the output scale is kept positive with softplus."""
    t = blend(internal, external, g)
    mu_style = matmul(t.mu_blend, g.shift_w) + g.shift_b
    sigma_style = softplus(matmul(t.sigma_blend, g.scale_w) + g.scale_b) + eps
    return StyleStats(mu_style, sigma_style)


def adain(stream: Tensor, style: StyleStats, eps: float = NSAN_EPS) -> Tensor:
    """Re-standardize ``stream`` per instance and impose the style mean and scale."""
    if stream.ndim != 3 or style.mu.shape[-1] != stream.shape[-1]:
        raise DimensionError(f"adain stream {stream.shape} vs style {style.mu.shape}")
    own = instance_stats(stream, eps)
    return style.sigma * ((stream - own.mu) / own.sigma) + style.mu


@dataclass
class NormParams:
    gamma: Tensor
    beta: Tensor
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None
    momentum: float = 0.1

    @classmethod
    def init(cls, kind: str, dim: int, dtype=np.float64) -> "NormParams":
        if kind not in NORM_KINDS:
            raise ConfigError(f"unknown normalization kind {kind!r}; expected one of {NORM_KINDS}")
        p = cls(
            Tensor(np.ones(dim), requires_grad=True, dtype=dtype),
            Tensor(np.zeros(dim), requires_grad=True, dtype=dtype),
        )
        if kind == "batch":
            p.running_mean = np.zeros(dim, dtype=dtype)
            p.running_var = np.ones(dim, dtype=dtype)
        return p

    def named(self) -> dict[str, Tensor]:
        return {"gamma": self.gamma, "beta": self.beta}


def baseline_normalize(x: Tensor, kind: str, params: NormParams, training: bool = False, eps: float = 1e-5) -> Tensor:
    """Layer, batch or instance normalization of ``[M, N, D]`` followed by ``gamma * x + beta``.

    Batch normalization updates ``params.running_*`` in place during training
    and uses them in eval mode.
    """
    if kind == "layer":
        mu, sd = reduce_stats(x, axis=2, eps=eps)
        y = (x - mu) / sd
    elif kind == "instance":
        mu, sd = reduce_stats(x, axis=1, eps=eps)
        y = (x - mu) / sd
    elif kind == "batch":
        if params.running_mean is None:
            raise ConfigError("batch normalization needs running statistics")
        if training:
            flat = x.reshape(-1, x.shape[-1])
            mu, sd = reduce_stats(flat, axis=0, eps=eps)
            y = (flat - mu) / sd
            y = y.reshape(x.shape)
            m = params.momentum
            count = flat.shape[0]
            var = flat.data.var(axis=0) * (count / max(count - 1, 1))
            params.running_mean = (1 - m) * params.running_mean + m * flat.data.mean(axis=0)
            params.running_var = (1 - m) * params.running_var + m * var
        else:
            mu = Tensor(params.running_mean.astype(x.dtype))
            sd = Tensor(np.sqrt(params.running_var + eps).astype(x.dtype))
            y = (x - mu) / sd
    else:
        raise ConfigError(f"unknown normalization kind {kind!r}; expected one of {NORM_KINDS}")
    return y * params.gamma + params.beta


def zscore(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Per-series z-score with the exact population standard deviation."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=axis, keepdims=True)
    sd = np.maximum(x.std(axis=axis, keepdims=True), 1e-12)
    return (x - mu) / sd


def demonstrate_collapse(x, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(N(x), N(a x + b))``; for ``a > 0`` the two coincide.

    Two different series map to one normalized input, which is exactly the
    information loss NSAN is meant to undo.
    """
    if not a > 0:
        raise ContractError(f"scale a must be positive, got {a}")
    x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    return zscore(x), zscore(a * x + b)
