"""Central finite-difference gradient checking."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, no_grad


@dataclass
class GradCheckResult:
    name: str
    max_rel_error: float
    worst_input: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_error)) and self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute deviation scaled by the larger gradient magnitude."""
    scale = max(float(np.max(np.abs(numeric), initial=0.0)), float(np.max(np.abs(analytic), initial=0.0)), 1e-10)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def numeric_grad(fn: Callable[[], Tensor], x: Tensor, h: float = 1e-5) -> np.ndarray:
    base = x.data
    grad = np.zeros(base.shape, dtype=np.float64)
    flat = base.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            plus = flat.copy()
            plus[i] += h
            x.data = plus.reshape(base.shape)
            f_plus = float(fn().data.sum())
            minus = flat.copy()
            minus[i] -= h
            x.data = minus.reshape(base.shape)
            f_minus = float(fn().data.sum())
            grad.reshape(-1)[i] = (f_plus - f_minus) / (2 * h)
    x.data = base
    return grad


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    name: str = "block",
    h: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradCheckResult:
    """Compare autodiff gradients of the scalar ``fn()`` to central differences.

    The error is the largest absolute deviation over all inputs divided by the
    largest gradient magnitude over all inputs.

    ``fn`` must be a pure function of the tensors in ``inputs`` (re-seed any
    rng inside it).  All inputs are expected to be 64-bit.
    """
    for x in inputs:
        x.requires_grad = True
        x.zero_grad()
    out = fn()
    out.backward()
    pairs = []
    for x in inputs:
        analytic = x.grad if x.grad is not None else np.zeros(x.shape)
        pairs.append((analytic, numeric_grad(fn, x, h)))
    # one scale for the whole block, so exactly-zero gradients do not divide FD noise by ~0
    scale = max(max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(n), initial=0.0))) for a, n in pairs)
    scale = max(scale, 1e-10)
    errs = [float(np.max(np.abs(a - n), initial=0.0)) / scale for a, n in pairs]
    worst_idx = int(np.argmax(errs))
    return GradCheckResult(name, errs[worst_idx], worst_idx, tolerance)
