"""Series loading, chronological splits, windowing, noise injection and ADF diagnostics."""
from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ConfigError, DataError

STD_FLOOR = 1e-5


@dataclass(frozen=True)
class SeriesFrame:
    names: tuple[str, ...]
    values: np.ndarray  # [C, T]
    timestamps: tuple[str, ...] | None = None
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    source: str | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DataError(f"values must be [C, T], got shape {v.shape}")
        if len(self.names) != v.shape[0]:
            raise DataError(f"{len(self.names)} names for {v.shape[0]} channels")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def slice(self, start: int, stop: int) -> "SeriesFrame":
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return replace(self, values=self.values[:, start:stop], timestamps=ts)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path: str | os.PathLike) -> SeriesFrame:
    """Read a headed CSV; a non-numeric first column is taken as timestamps."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file, expected a header row")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not body:
        raise DataError(f"{path}: header but no data rows")
    has_time = not _is_number(body[0][0].strip())
    first = 1 if has_time else 0
    names = tuple(h.strip() for h in header[first:])
    if not names:
        raise DataError(f"{path}: no value columns")
    values = np.empty((len(body), len(names)))
    stamps = []
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}")
        if has_time:
            stamps.append(row[0])
        for j, cell in enumerate(row[first:]):
            cell = cell.strip()
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {lineno}, column {names[j]!r}: non-numeric value {cell!r}"
                ) from None
            if not math.isfinite(values[i, j]):
                raise DataError(f"{path}: row {lineno}, column {names[j]!r}: missing value {cell!r}")
    return SeriesFrame(names, values.T, tuple(stamps) if has_time else None, source=str(path))


def frame_from_array(values: np.ndarray, names=None) -> SeriesFrame:
    values = np.asarray(values, dtype=np.float64)
    names = tuple(names) if names is not None else tuple(f"ch{i}" for i in range(values.shape[0]))
    return SeriesFrame(names, values)


def split_points(t: int) -> tuple[int, int]:
    return math.floor(0.7 * t), math.floor(0.8 * t)


def chrono_split(f: SeriesFrame) -> tuple[SeriesFrame, SeriesFrame, SeriesFrame]:
    """Contiguous 7:1:2 train/validation/test split in time order."""
    if f.length < 10:
        raise DataError(f"series of length {f.length} is too short to split (need >= 10)")
    a, b = split_points(f.length)
    return f.slice(0, a), f.slice(a, b), f.slice(b, f.length)


def fit_standardizer(train: SeriesFrame) -> tuple[np.ndarray, np.ndarray]:
    mean = train.values.mean(axis=1)
    std = np.maximum(train.values.std(axis=1), STD_FLOOR)
    return mean, std


def standardize(f: SeriesFrame, stats: tuple[np.ndarray, np.ndarray]) -> SeriesFrame:
    mean, std = stats
    return replace(f, values=(f.values - mean[:, None]) / std[:, None], mean=mean, std=std)


def destandardize(values: np.ndarray, stats: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Map standardized values with channels on axis -2 back to original units."""
    mean, std = stats
    return np.asarray(values) * std[:, None] + mean[:, None]


@dataclass
class WindowBatch:
    inputs: np.ndarray  # [B, C, L]
    targets: np.ndarray  # [B, C, O]
    origins: np.ndarray  # [B] index of the first input step

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def take(self, idx) -> "WindowBatch":
        return WindowBatch(self.inputs[idx], self.targets[idx], self.origins[idx])


def window(f: SeriesFrame | np.ndarray, look_back: int, horizon: int, stride: int = 1) -> WindowBatch:
    """All windows of ``look_back`` inputs followed by ``horizon`` targets."""
    values = f.values if isinstance(f, SeriesFrame) else np.asarray(f, dtype=np.float64)
    if look_back < 1 or horizon < 1 or stride < 1:
        raise ConfigError(f"look_back, horizon and stride must be >= 1, got {look_back}, {horizon}, {stride}")
    c, t = values.shape
    span = look_back + horizon
    if t < span:
        warnings.warn(f"segment of length {t} shorter than look_back + horizon = {span}; no windows")
        return WindowBatch(np.empty((0, c, look_back)), np.empty((0, c, horizon)), np.empty(0, dtype=int))
    origins = np.arange(0, t - span + 1, stride)
    idx = origins[:, None] + np.arange(span)[None, :]
    w = values[:, idx].transpose(1, 0, 2)
    return WindowBatch(w[:, :, :look_back].copy(), w[:, :, look_back:].copy(), origins)


def iter_batches(wb: WindowBatch, batch_size: int, rng: np.random.Generator | None = None) -> Iterator[WindowBatch]:
    order = np.arange(len(wb)) if rng is None else rng.permutation(len(wb))
    for start in range(0, len(order), batch_size):
        yield wb.take(order[start : start + batch_size])


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ConfigError(f"noise level must be >= 0, got {self.level}")


def add_noise(x: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """``x + level * g`` with ``g ~ N(0, 1)`` drawn from ``spec.seed``."""
    x = np.asarray(x)
    if spec.level == 0:
        return x.copy()
    g = np.random.default_rng(spec.seed).standard_normal(x.shape)
    return x + spec.level * g


def schwert_lag(t: int) -> int:
    return int(math.floor(12.0 * (t / 100.0) ** 0.25))


def _adf_design(y: np.ndarray, dy: np.ndarray, k: int, nobs: int) -> np.ndarray:
    """Columns ``[1, y_{t-1}, dy_{t-1}, ..., dy_{t-k}]`` for the last ``nobs`` differences."""
    n = dy.size
    cols = [np.ones(nobs), y[n - nobs : n]]
    for j in range(1, k + 1):
        cols.append(dy[n - nobs - j : n - j])
    return np.column_stack(cols)


def _ols(x: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    xtx = x.T @ x
    try:
        chol = np.linalg.cholesky(xtx)
    except np.linalg.LinAlgError:
        raise DataError("singular ADF design matrix (constant or degenerate series)") from None
    if np.min(np.diag(chol)) <= 1e-10 * np.max(np.diag(chol)):
        raise DataError("singular ADF design matrix (constant or degenerate series)")
    inv = np.linalg.inv(xtx)
    beta = inv @ (x.T @ target)
    resid = target - x @ beta
    return beta, inv, float(resid @ resid)


def adf_statistic(series, lags: int | None = None) -> float:
    """Augmented Dickey-Fuller t-statistic, constant but no trend.

    Regresses ``dy_t`` on ``[1, y_{t-1}, dy_{t-1}, ..., dy_{t-k}]`` by least
    squares (normal equations) and returns the t-ratio of the ``y_{t-1}``
    coefficient.  With ``lags=None`` the Schwert rule gives the maximum lag
    and ``k`` is the AIC minimizer over ``0..max`` on a common sample; an
    explicit ``lags`` fixes ``k``.
    """
    y = np.asarray(series, dtype=np.float64).ravel()
    t = y.size
    if t < 20:
        raise DataError(f"ADF needs at least 20 observations, got {t}")
    dy = np.diff(y)
    max_k = schwert_lag(t) if lags is None else int(lags)
    max_k = min(max_k, t // 2 - 2) if lags is None else max_k
    if dy.size - max_k <= max_k + 2:
        raise DataError(f"series of length {t} too short for {max_k} lags")
    k = max_k
    if lags is None:
        nobs = dy.size - max_k
        target = dy[-nobs:]
        best = None
        for cand in range(max_k + 1):
            _, _, ssr = _ols(_adf_design(y, dy, cand, nobs), target)
            aic = nobs * math.log(ssr / nobs) + 2 * (cand + 2)
            if best is None or aic < best[0]:
                best = (aic, cand)
        k = best[1]
    nobs = dy.size - k
    x = _adf_design(y, dy, k, nobs)
    beta, inv, ssr = _ols(x, dy[-nobs:])
    s2 = ssr / (nobs - x.shape[1])
    return float(beta[1] / math.sqrt(s2 * inv[1, 1]))


def frame_adf(f: SeriesFrame) -> float:
    """Mean of the per-channel ADF statistics."""
    return float(np.mean([adf_statistic(row) for row in f.values]))


SUMMARY_HEADER = ("dataset", "channels", "length", "adf")


def summarize(paths) -> list[dict]:
    rows = []
    for p in paths:
        f = load_csv(p)
        rows.append({"dataset": Path(p).stem, "channels": f.channels, "length": f.length, "adf": frame_adf(f)})
    return rows
