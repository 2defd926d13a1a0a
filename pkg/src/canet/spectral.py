"""Adaptive spectral block: learnable Fourier filtering with an energy mask.

FFT convention: the forward transform is unnormalized and the inverse
carries the ``1/N`` factor, so a constant sequence ``c`` of length ``N`` has
DC bin ``c * N``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .tensor import Tensor, sigmoid


@dataclass
class ComplexSpectrum:
    real: Tensor
    imag: Tensor
    n: int

    @property
    def bins(self) -> int:
        return self.real.shape[-2]

    def energy(self) -> np.ndarray:
        return self.real.data**2 + self.imag.data**2


def _bin_weights(n: int, dtype) -> np.ndarray:
    f = n // 2 + 1
    w = np.full(f, 2.0, dtype=dtype)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w


def rfft(x: Tensor) -> ComplexSpectrum:
    """Real DFT along axis -2 of a ``[B, N, D]`` tensor."""
    if x.ndim != 3:
        raise DimensionError(f"rfft expects [B, N, D], got {x.shape}")
    n = x.shape[1]
    if n < 1:
        raise ContractError("rfft needs N >= 1")
    spec = np.fft.rfft(x.data, axis=1)
    dtype = x.dtype

    # d/dx of sum(gr*Re + gi*Im) = Re(sum_f (gr + i gi) e^{+2 pi i f t / N})
    def back_real(g):
        full = g.astype(np.complex128) / _bin_weights(n, np.float64)[None, :, None]
        return (np.fft.irfft(full, n=n, axis=1).astype(dtype) * n,)

    def back_imag(g):
        full = 1j * g.astype(np.complex128) / _bin_weights(n, np.float64)[None, :, None]
        return (np.fft.irfft(full, n=n, axis=1).astype(dtype) * n,)

    real = Tensor._result(spec.real.astype(dtype), (x,), back_real)
    imag = Tensor._result(spec.imag.astype(dtype), (x,), back_imag)
    return ComplexSpectrum(real, imag, n)


def irfft(s: ComplexSpectrum, n: int) -> Tensor:
    """Inverse of :func:`rfft`; imaginary parts of the DC and Nyquist bins are ignored."""
    if s.real.shape != s.imag.shape:
        raise DimensionError(f"spectrum parts disagree: {s.real.shape} vs {s.imag.shape}")
    if s.bins != n // 2 + 1:
        raise ContractError(f"spectrum has {s.bins} bins but N={n} needs {n // 2 + 1}")
    dtype = s.real.dtype
    out = np.fft.irfft(s.real.data + 1j * s.imag.data, n=n, axis=1).astype(dtype)
    w = _bin_weights(n, np.float64)[None, :, None] / n

    def back(g):
        gs = np.fft.rfft(g, axis=1)
        return ((w * gs.real).astype(dtype), (w * gs.imag).astype(dtype))

    return Tensor._result(out, (s.real, s.imag), back)


@dataclass
class AsbParams:
    global_re: Tensor
    global_im: Tensor
    local_re: Tensor
    local_im: Tensor
    threshold_logit: Tensor

    @classmethod
    def init(cls, n: int, dim: int, dtype=np.float64, threshold_logit: float = -2.0) -> "AsbParams":
        f = n // 2 + 1
        return cls(
            Tensor(np.ones((f, dim)), requires_grad=True, dtype=dtype),
            Tensor(np.zeros((f, dim)), requires_grad=True, dtype=dtype),
            Tensor(np.zeros((f, dim)), requires_grad=True, dtype=dtype),
            Tensor(np.zeros((f, dim)), requires_grad=True, dtype=dtype),
            Tensor(np.array([threshold_logit]), requires_grad=True, dtype=dtype),
        )

    def named(self) -> dict[str, Tensor]:
        return {
            "global_re": self.global_re,
            "global_im": self.global_im,
            "local_re": self.local_re,
            "local_im": self.local_im,
            "threshold_logit": self.threshold_logit,
        }

    @property
    def threshold(self) -> float:
        return float(sigmoid(self.threshold_logit).data[0])


def energy_mask(spec: ComplexSpectrum, threshold: float) -> np.ndarray:
    """Per-instance boolean mask ``[M, F, 1]`` of bins whose relative energy reaches ``threshold``.

    Energy is averaged over the feature axis and divided by the per-instance
    maximum; the DC bin is always kept.
    """
    e = spec.energy().mean(axis=2, keepdims=True)
    peak = e.max(axis=1, keepdims=True)
    rel = np.divide(e, peak, out=np.zeros_like(e), where=peak > 0)
    mask = rel >= threshold
    mask[:, 0, :] = True
    return mask


def asb_forward(x: Tensor, params: AsbParams, mask: np.ndarray | None = None) -> Tensor:
    """Global filter plus energy-masked local filter in the frequency domain, with residual.

    ``mask`` may be passed to freeze the thresholding (e.g. for finite
    differences); it is never differentiated.
    """
    if x.ndim != 3:
        raise DimensionError(f"asb_forward expects [B, N, D], got {x.shape}")
    n = x.shape[1]
    spec = rfft(x)
    if params.global_re.shape != (spec.bins, x.shape[2]):
        raise DimensionError(f"filter shape {params.global_re.shape} does not fit spectrum ({spec.bins}, {x.shape[2]})")
    if mask is None:
        mask = energy_mask(spec, params.threshold)
    m = Tensor(mask.astype(x.dtype))
    sr, si = spec.real, spec.imag
    mr, mi = sr * m, si * m
    out_re = sr * params.global_re - si * params.global_im + mr * params.local_re - mi * params.local_im
    out_im = sr * params.global_im + si * params.global_re + mr * params.local_im + mi * params.local_re
    return irfft(ComplexSpectrum(out_re, out_im, n), n) + x
