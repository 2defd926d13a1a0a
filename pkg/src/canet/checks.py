"""Registered gradient checks, one per differentiable block.

Each builder returns ``(fn, inputs)`` where ``fn()`` is a scalar: the block
output contracted with a fixed random weight, so no gradient is trivially
zero.  All tensors are 64-bit.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .conv import IcbParams, icb_forward
from .gradcheck import GradCheckResult, check_gradients
from .kronecker import KronFactors, skpl_forward
from .model import CANet, ExternalProj, ModelConfig, RawStats, external_style
from .nsan import GateParams, StyleStats, adain, style_blending_gate
from .patch import EmbedParams, dual_embed
from .spectral import AsbParams, ComplexSpectrum, asb_forward, energy_mask, irfft, rfft
from .tensor import Tensor, conv1d, gelu, matmul, reduce_stats
from .train import l2_loss

Builder = Callable[[np.random.Generator], tuple[Callable[[], Tensor], list[Tensor]]]


def _t(rng, *shape, scale=1.0) -> Tensor:
    return Tensor(rng.standard_normal(shape) * scale, requires_grad=True)


def _contract(out: Tensor, w: np.ndarray) -> Tensor:
    return (out * Tensor(w)).sum()


def _matmul(rng):
    a, b = _t(rng, 2, 3, 4), _t(rng, 4, 5)
    w = rng.standard_normal((2, 3, 5))
    return (lambda: _contract(matmul(a, b), w)), [a, b]


def _conv1d(rng):
    x, k, bias = _t(rng, 2, 3, 7), _t(rng, 4, 3, 3), _t(rng, 4)
    w = rng.standard_normal((2, 4, 7))
    return (lambda: _contract(conv1d(x, k, bias), w)), [x, k, bias]


def _gelu(rng):
    x = _t(rng, 3, 5, scale=2.0)
    w = rng.standard_normal((3, 5))
    return (lambda: _contract(gelu(x), w)), [x]


def _reduce_stats(rng):
    x = _t(rng, 3, 6, 2)
    w1, w2 = rng.standard_normal((3, 1, 2)), rng.standard_normal((3, 1, 2))

    def fn():
        mu, sd = reduce_stats(x, axis=1)
        return _contract(mu, w1) + _contract(sd, w2)

    return fn, [x]


def _fft(rng):
    x = _t(rng, 2, 7, 3)
    f = 7 // 2 + 1
    wr, wi = rng.standard_normal((2, f, 3)), rng.standard_normal((2, f, 3))
    sr, si = _t(rng, 2, 5, 3), _t(rng, 2, 5, 3)
    wy = rng.standard_normal((2, 8, 3))

    def fn():
        s = rfft(x)
        y = irfft(ComplexSpectrum(sr, si, 8), 8)
        return _contract(s.real, wr) + _contract(s.imag, wi) + _contract(y, wy)

    return fn, [x, sr, si]


def _asb(rng):
    n, d = 8, 3
    x = _t(rng, 2, n, d)
    p = AsbParams.init(n, d)
    for t in (p.global_re, p.global_im, p.local_re, p.local_im):
        t.data = rng.standard_normal(t.shape)
    p.threshold_logit.data = np.array([0.0])
    mask = energy_mask(rfft(x), p.threshold)
    w = rng.standard_normal((2, n, d))
    inputs = [x, p.global_re, p.global_im, p.local_re, p.local_im]
    return (lambda: _contract(asb_forward(x, p, mask=mask), w)), inputs


def _icb(rng):
    d = 3
    x = _t(rng, 2, 5, d)
    p = IcbParams.init(d, rng)
    w = rng.standard_normal((2, 5, d))
    seed = int(rng.integers(1 << 31))

    def fn():
        return _contract(icb_forward(x, p, 0.3, training=True, rng=np.random.default_rng(seed)), w)

    return fn, [x, *p.named().values()]


def _dual_embed(rng):
    patches = _t(rng, 3, 4, 5)
    p = EmbedParams.init(5, 6, rng)
    w1, w2 = rng.standard_normal((3, 4, 6)), rng.standard_normal((3, 4, 6))

    def fn():
        e = dual_embed(patches, p)
        return _contract(e.stream, w1) + _contract(e.internal_style, w2)

    return fn, [patches, *p.named().values()]


def _gate(rng):
    d, m = 4, 3
    g = GateParams.init(d, rng, alpha=0.3)
    mi, me = _t(rng, m, 1, d), _t(rng, m, 1, d)
    si = Tensor(np.abs(rng.standard_normal((m, 1, d))) + 0.5, requires_grad=True)
    se = Tensor(np.abs(rng.standard_normal((m, 1, d))) + 0.5, requires_grad=True)
    w1, w2 = rng.standard_normal((m, 1, d)), rng.standard_normal((m, 1, d))

    def fn():
        s = style_blending_gate(StyleStats(mi, si), StyleStats(me, se), g)
        return _contract(s.mu, w1) + _contract(s.sigma, w2)

    return fn, [mi, si, me, se, *g.named().values()]


def _adain(rng):
    m, n, d = 2, 5, 3
    s = _t(rng, m, n, d)
    mu = _t(rng, m, 1, d)
    sigma = Tensor(np.abs(rng.standard_normal((m, 1, d))) + 0.5, requires_grad=True)
    w = rng.standard_normal((m, n, d))
    return (lambda: _contract(adain(s, StyleStats(mu, sigma)), w)), [s, mu, sigma]


def _gate_adain(rng):
    m, n, d = 2, 4, 3
    s, internal = _t(rng, m, n, d), _t(rng, m, n, d)
    mu_e = _t(rng, m, 1, d)
    sig_e = Tensor(np.abs(rng.standard_normal((m, 1, d))) + 0.5, requires_grad=True)
    g = GateParams.init(d, rng)
    w = rng.standard_normal((m, n, d))

    def fn():
        from .nsan import instance_stats

        style = style_blending_gate(instance_stats(internal), StyleStats(mu_e, sig_e), g)
        return _contract(adain(s, style), w)

    return fn, [s, internal, mu_e, sig_e, *g.named().values()]


def _external(rng):
    b, c, d = 2, 3, 4
    mu = _t(rng, b, c)
    sigma = Tensor(np.abs(rng.standard_normal((b, c))) + 0.5, requires_grad=True)
    p = ExternalProj.init(d, rng)
    w1, w2 = rng.standard_normal((b * c, 1, d)), rng.standard_normal((b * c, 1, d))

    def fn():
        s = external_style(RawStats(mu, sigma), p)
        return _contract(s.mu, w1) + _contract(s.sigma, w2)

    return fn, [mu, sigma, *p.named().values()]


def _skpl(rng):
    f = KronFactors.init(6, 8, rng, depth=2)
    f.bias.data = rng.standard_normal(6)
    x = _t(rng, 3, 8)
    w = rng.standard_normal((3, 6))
    return (lambda: _contract(skpl_forward(x, f), w)), [x, *f.named().values()]


def _model(rng):
    cfg = ModelConfig(look_back=16, horizon=4, channels=2, patch_sizes=[4, 8], embed_dim=8, dropout=0.0, precision=64, seed=int(rng.integers(1000)))
    model = CANet(cfg)
    # perturb the identity-initialized spectral filters so their gradients are exercised
    for name, p in model.named_parameters().items():
        if ".asb." in name and "threshold" not in name:
            p.data = p.data + 0.1 * rng.standard_normal(p.shape)
    x = rng.standard_normal((2, 2, 16))
    y = rng.standard_normal((2, 2, 4))
    return (lambda: l2_loss(model.forward(x), y)), model.parameters()


REGISTRY: dict[str, Builder] = {
    "matmul": _matmul,
    "conv1d": _conv1d,
    "gelu": _gelu,
    "reduce_stats": _reduce_stats,
    "rfft/irfft": _fft,
    "asb_forward": _asb,
    "icb_forward": _icb,
    "dual_embed": _dual_embed,
    "style_blending_gate": _gate,
    "adain": _adain,
    "gate+adain": _gate_adain,
    "external_style": _external,
    "skpl_forward": _skpl,
    "model+l2_loss": _model,
}


def run_check(name: str, seed: int = 0, tolerance: float = 1e-4) -> GradCheckResult:
    fn, inputs = REGISTRY[name](np.random.default_rng(seed))
    return check_gradients(fn, inputs, name=name, tolerance=tolerance)


def run_all(seed: int = 0, tolerance: float = 1e-4) -> list[GradCheckResult]:
    return [run_check(name, seed, tolerance) for name in REGISTRY]
