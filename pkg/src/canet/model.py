"""CANet assembly: instance-norm wrapper, per-resolution layers, Kronecker head.

Parameter names are hierarchical and stable::

    layers.<l>.embed.{w_stream,b_stream,w_style,b_style}
    layers.<l>.asb.{global_re,global_im,local_re,local_im,threshold_logit}
    layers.<l>.icb.{conv_a,bias_a,conv_b,bias_b,conv_out,bias_out}
    layers.<l>.external.{mu_w,mu_b,sigma_w,sigma_b}
    layers.<l>.gate.{w_mu_i,w_sigma_i,w_mu_e,w_sigma_e,shift_w,shift_b,scale_w,scale_b}
    layers.<l>.norm.{gamma,beta}              (baseline norms only)
    head.{a<k>,b<k>,bias}

Batch normalization running statistics are buffers named
``layers.<l>.norm.running_mean`` / ``running_var``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .conv import IcbParams, icb_forward
from .errors import ConfigError
from .kronecker import KronFactors, dense_param_count, skpl_forward
from .nsan import (
    NSAN_EPS,
    GateParams,
    NormParams,
    StyleStats,
    adain,
    baseline_normalize,
    instance_stats,
    style_blending_gate,
)
from .patch import EmbedParams, dual_embed, num_patches, patchify
from .spectral import AsbParams, asb_forward
from .tensor import Tensor, concat, softplus, sqrt

NORM_CHOICES = ("nsan", "layer", "batch", "instance")
FIXED_PATCH = 16
# sigma_raw = sqrt(var + RAW_EPS); acts as a 1e-5 floor on the window std.
RAW_EPS = 1e-10


@dataclass
class ModelConfig:
    look_back: int = 96
    horizon: int = 24
    channels: int = 1
    patch_sizes: list[int] = field(default_factory=lambda: [8, 32])
    embed_dim: int = 32
    dropout: float = 0.3
    blend_alpha: float = 0.5
    skpl_stack: int = 2
    use_asb: bool = True
    use_icb: bool = True
    use_mrp: bool = True
    use_blending_gate: bool = True
    norm_kind: str = "nsan"
    seed: int = 0
    precision: int = 32

    def __post_init__(self):
        self.patch_sizes = [int(p) for p in self.patch_sizes]
        self.validate()

    def validate(self) -> None:
        for name in ("look_back", "horizon", "channels", "embed_dim", "skpl_stack"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.patch_sizes:
            raise ConfigError("patch_sizes must not be empty")
        for p in self.patches:
            if not 1 <= p <= self.look_back:
                raise ConfigError(f"patch size {p} outside [1, look_back={self.look_back}]")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if not 0.0 <= self.blend_alpha <= 1.0:
            raise ConfigError(f"blend_alpha must be in [0, 1], got {self.blend_alpha}")
        if self.norm_kind not in NORM_CHOICES:
            raise ConfigError(f"norm_kind must be one of {NORM_CHOICES}, got {self.norm_kind!r}")
        if self.precision not in (32, 64):
            raise ConfigError(f"precision must be 32 or 64, got {self.precision}")

    @property
    def patches(self) -> list[int]:
        """Patch sizes actually used; a single fixed size when multi-resolution is off."""
        return list(self.patch_sizes) if self.use_mrp else [FIXED_PATCH]

    @property
    def dtype(self):
        return np.float64 if self.precision == 64 else np.float32

    @property
    def head_in(self) -> int:
        return self.embed_dim * sum(num_patches(self.look_back, p) for p in self.patches)

    @property
    def uses_gate(self) -> bool:
        return self.norm_kind == "nsan" and self.use_blending_gate

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class RawStats:
    mu: Tensor  # [B, C]
    sigma: Tensor  # [B, C]


def instance_normalize(x: Tensor) -> tuple[Tensor, RawStats]:
    """Per-window, per-channel z-score over the time axis of ``[B, C, L]``."""
    mu = x.mean(axis=2, keepdims=True)
    centered = x - mu
    sigma = sqrt((centered * centered).mean(axis=2, keepdims=True) + RAW_EPS)
    b, c = x.shape[:2]
    return centered / sigma, RawStats(mu.reshape(b, c), sigma.reshape(b, c))


def denormalize(y: Tensor, stats: RawStats) -> Tensor:
    b, c = stats.mu.shape
    return y * stats.sigma.reshape(b, c, 1) + stats.mu.reshape(b, c, 1)


@dataclass
class ExternalProj:
    mu_w: Tensor
    mu_b: Tensor
    sigma_w: Tensor
    sigma_b: Tensor

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator, dtype=np.float64) -> "ExternalProj":
        # fan_in is 1 for a scalar -> D projection
        u = lambda: Tensor(rng.uniform(-1.0, 1.0, size=(dim,)), requires_grad=True, dtype=dtype)
        return cls(u(), u(), u(), u())

    def named(self) -> dict[str, Tensor]:
        return {"mu_w": self.mu_w, "mu_b": self.mu_b, "sigma_w": self.sigma_w, "sigma_b": self.sigma_b}


def external_style(stats: RawStats, proj: ExternalProj, eps: float = NSAN_EPS) -> StyleStats:
    """Project the raw window statistics ``[B, C]`` to width-D style ``[B*C, 1, D]``."""
    m = stats.mu.shape[0] * stats.mu.shape[1]
    mu = stats.mu.reshape(m, 1, 1)
    sigma = stats.sigma.reshape(m, 1, 1)
    return StyleStats(mu * proj.mu_w + proj.mu_b, softplus(sigma * proj.sigma_w + proj.sigma_b) + eps)


@dataclass
class Layer:
    patch: int
    embed: EmbedParams
    asb: AsbParams | None = None
    icb: IcbParams | None = None
    external: ExternalProj | None = None
    gate: GateParams | None = None
    norm: NormParams | None = None

    def named(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        embed = self.embed.named()
        if self.norm is not None:
            # the internal style projection only feeds NSAN
            embed = {k: v for k, v in embed.items() if not k.endswith("_style")}
        out.update({f"embed.{k}": v for k, v in embed.items()})
        for part in ("asb", "icb", "external", "gate", "norm"):
            block = getattr(self, part)
            if block is not None:
                out.update({f"{part}.{k}": v for k, v in block.named().items()})
        return out


class CANet:
    """The full forecasting network with its parameters."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator | None = None):
        self.config = config
        if rng is None:
            from .seeding import split_seed

            rng = split_seed(config.seed).init
        dt = config.dtype
        d = config.embed_dim
        self.layers: list[Layer] = []
        for p in config.patches:
            n = num_patches(config.look_back, p)
            layer = Layer(p, EmbedParams.init(p, d, rng, dt))
            if config.use_asb:
                layer.asb = AsbParams.init(n, d, dt)
            if config.use_icb:
                layer.icb = IcbParams.init(d, rng, dt)
            if config.norm_kind == "nsan":
                if config.use_blending_gate:
                    layer.external = ExternalProj.init(d, rng, dt)
                    layer.gate = GateParams.init(d, rng, config.blend_alpha, dt)
            else:
                layer.norm = NormParams.init(config.norm_kind, d, dt)
            self.layers.append(layer)
        self.head = KronFactors.init(config.horizon, config.head_in, rng, config.skpl_stack, dt)

    # -- parameter access -------------------------------------------------
    def named_parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, layer in enumerate(self.layers):
            out.update({f"layers.{i}.{k}": v for k, v in layer.named().items()})
        out.update({f"head.{k}": v for k, v in self.head.named().items()})
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def named_buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            if layer.norm is not None and layer.norm.running_mean is not None:
                out[f"layers.{i}.norm.running_mean"] = layer.norm.running_mean
                out[f"layers.{i}.norm.running_var"] = layer.norm.running_var
        return out

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        i, attr = name.split(".")[1], name.rsplit(".", 1)[1]
        setattr(self.layers[int(i)].norm, attr, np.array(value, dtype=self.config.dtype))

    def state(self) -> dict[str, np.ndarray]:
        """Copy of every parameter and buffer, keyed by name."""
        out = {k: v.data.copy() for k, v in self.named_parameters().items()}
        out.update({k: v.copy() for k, v in self.named_buffers().items()})
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        buffers = self.named_buffers()
        expected = set(params) | set(buffers)
        if set(state) != expected:
            missing = sorted(expected - set(state))
            extra = sorted(set(state) - expected)
            raise ConfigError(f"state mismatch; missing={missing[:5]} unexpected={extra[:5]}")
        for name, t in params.items():
            arr = np.asarray(state[name])
            if arr.shape != t.shape:
                raise ConfigError(f"{name}: shape {arr.shape} != expected {t.shape}")
            t.data = arr.astype(t.dtype, copy=True)
            t.data.flags.writeable = False
        for name in buffers:
            self.set_buffer(name, state[name])

    def param_count(self) -> int:
        return sum(t.size for t in self.parameters())

    def dense_head_param_count(self) -> int:
        return dense_param_count(self.config.horizon, self.config.head_in)

    def filters(self) -> dict[str, np.ndarray]:
        """Complex spectral filters per layer, for external inspection."""
        out = {}
        for i, layer in enumerate(self.layers):
            if layer.asb is not None:
                a = layer.asb
                out[f"layers.{i}.global"] = a.global_re.data + 1j * a.global_im.data
                out[f"layers.{i}.local"] = a.local_re.data + 1j * a.local_im.data
        return out

    # -- forward ----------------------------------------------------------
    def _check_input(self, x) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x), dtype=self.config.dtype)
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.channels or x.shape[2] != cfg.look_back:
            raise ConfigError(f"input shape {x.shape} does not match [B, {cfg.channels}, {cfg.look_back}]")
        if x.dtype != cfg.dtype:
            x = Tensor(x.data, dtype=cfg.dtype)
        return x

    def features(self, x, training: bool = False, rng: np.random.Generator | None = None) -> tuple[Tensor, RawStats]:
        """Forecast in normalized units (before denormalization) and the raw window stats."""
        cfg = self.config
        x = self._check_input(x)
        bsz = x.shape[0]
        x_norm, raw = instance_normalize(x)
        flat = []
        for layer in self.layers:
            emb = dual_embed(patchify(x_norm, layer.patch), layer.embed)
            s = emb.stream
            if layer.asb is not None:
                s = asb_forward(s, layer.asb)
            if layer.icb is not None:
                s = icb_forward(s, layer.icb, cfg.dropout, training, rng)
            if cfg.norm_kind == "nsan":
                style = instance_stats(emb.internal_style)
                if layer.gate is not None:
                    style = style_blending_gate(style, external_style(raw, layer.external), layer.gate)
                s = adain(s, style)
            else:
                s = baseline_normalize(s, cfg.norm_kind, layer.norm, training)
            flat.append(s.reshape(s.shape[0], s.shape[1] * s.shape[2]))
        h = flat[0] if len(flat) == 1 else concat(flat, axis=1)
        y = skpl_forward(h, self.head)
        return y.reshape(bsz, cfg.channels, cfg.horizon), raw

    def forward(self, x, training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        y, raw = self.features(x, training, rng)
        return denormalize(y, raw)

    __call__ = forward


def param_reduction(config: ModelConfig) -> float:
    """Fraction of head parameters saved by the Kronecker head versus a dense one."""
    from .kronecker import factor_param_count

    dense = dense_param_count(config.horizon, config.head_in)
    return 1.0 - factor_param_count(config.horizon, config.head_in, config.skpl_stack) / dense


def describe(model: CANet) -> dict:
    cfg = model.config
    return {
        "params": model.param_count(),
        "head_in": cfg.head_in,
        "head_params": sum(t.size for t in model.head.named().values()),
        "dense_head_params": model.dense_head_param_count(),
        "layers": [{"patch": l.patch, "patches": math.ceil(cfg.look_back / l.patch)} for l in model.layers],
    }
