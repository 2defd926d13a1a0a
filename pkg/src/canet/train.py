"""Loss, metrics, Adam, the training loop and naive baselines."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .data import SeriesFrame, WindowBatch, chrono_split, fit_standardizer, iter_batches, standardize, window
from .errors import ConfigError, DimensionError, NumericError
from .model import CANet
from .seeding import split_seed
from .tensor import Tensor, no_grad


def _check_pair(pred, target) -> None:
    if pred.shape != target.shape:
        raise DimensionError(f"prediction {pred.shape} and target {target.shape} differ")


def l2_loss(pred: Tensor, target) -> Tensor:
    """Sum of squared errors divided by the batch size."""
    target = target if isinstance(target, Tensor) else Tensor(np.asarray(target), dtype=pred.dtype)
    _check_pair(pred, target)
    diff = pred - target
    return (diff * diff).sum() * (1.0 / pred.shape[0])


def mse(pred, target) -> float:
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    _check_pair(pred, target)
    return float(np.mean((pred - target) ** 2))


def mae(pred, target) -> float:
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    _check_pair(pred, target)
    return float(np.mean(np.abs(pred - target)))


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p.data) for p in params], [np.zeros_like(p.data) for p in params])


def adam_step(params, grads, state: AdamState, lr: float, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
    """Bias-corrected Adam update; parameter buffers are replaced, never mutated."""
    if len(params) != len(state.m):
        raise DimensionError(f"{len(params)} params but optimizer state for {len(state.m)}")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            continue
        state.m[i] = beta1 * state.m[i] + (1 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1 - beta2) * g * g
        step = lr * (state.m[i] / c1) / (np.sqrt(state.v[i] / c2) + eps)
        new = (p.data - step).astype(p.dtype)
        new.flags.writeable = False
        p.data = new


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 5
    seed: int = 0
    eval_batch_size: int = 256

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.batch_size < 1 or self.max_epochs < 0 or self.eval_batch_size < 1:
            raise ConfigError("batch sizes must be >= 1 and max_epochs >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Splits:
    train: WindowBatch
    val: WindowBatch
    test: WindowBatch
    stats: tuple[np.ndarray, np.ndarray]


def prepare(frame: SeriesFrame, look_back: int, horizon: int) -> Splits:
    """Chronological split, train-fitted standardization, then per-split windowing."""
    train, val, test = chrono_split(frame)
    stats = fit_standardizer(train)
    segs = [standardize(s, stats) for s in (train, val, test)]
    return Splits(*(window(s, look_back, horizon) for s in segs), stats)


@dataclass
class History:
    epochs: list[dict] = field(default_factory=list)
    step_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mse: float = math.inf

    def column(self, key: str) -> list[float]:
        return [e[key] for e in self.epochs]


def predict(model: CANet, inputs: np.ndarray, batch_size: int = 256) -> np.ndarray:
    out = []
    with no_grad():
        for start in range(0, len(inputs), batch_size):
            out.append(model.forward(inputs[start : start + batch_size], training=False).data)
    if not out:
        return np.empty((0, model.config.channels, model.config.horizon))
    return np.concatenate(out, axis=0)


def evaluate(model: CANet, wb: WindowBatch, batch_size: int = 256) -> tuple[float, float]:
    if len(wb) == 0:
        raise ConfigError("cannot evaluate on an empty window set")
    pred = predict(model, wb.inputs, batch_size)
    return mse(pred, wb.targets), mae(pred, wb.targets)


def train(model: CANet, train_set: WindowBatch, val_set: WindowBatch, cfg: TrainConfig) -> History:
    """Adam on the L2 loss with early stopping; the best-validation weights are restored."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ConfigError("training and validation sets must be non-empty")
    rngs = split_seed(cfg.seed)
    params = model.parameters()
    state = AdamState.zeros_like(params)
    hist = History()
    best_state = model.state()
    bad = 0
    dtype = model.config.dtype
    for epoch in range(cfg.max_epochs):
        total = 0.0
        for step, batch in enumerate(iter_batches(train_set, cfg.batch_size, rngs.shuffle)):
            for p in params:
                p.zero_grad()
            pred = model.forward(batch.inputs.astype(dtype), training=True, rng=rngs.dropout)
            loss = l2_loss(pred, batch.targets.astype(dtype))
            value = float(loss.data)
            if not math.isfinite(value):
                raise NumericError(f"non-finite loss {value} at epoch {epoch}, step {step}")
            loss.backward()
            adam_step(params, [p.grad for p in params], state, cfg.learning_rate)
            hist.step_losses.append(value)
            total += value * len(batch)
        val_mse, val_mae = evaluate(model, val_set, cfg.eval_batch_size)
        if not math.isfinite(val_mse):
            raise NumericError(f"non-finite validation MSE at epoch {epoch}")
        # per-window mean of the summed squared error
        hist.epochs.append({"epoch": epoch, "train_loss": total / len(train_set), "val_mse": val_mse, "val_mae": val_mae})
        if val_mse < hist.best_val_mse:
            hist.best_val_mse, hist.best_epoch = val_mse, epoch
            best_state = model.state()
            bad = 0
        else:
            bad += 1
            if bad >= cfg.patience:
                break
    model.load_state(best_state)
    return hist


@dataclass
class EvalReport:
    horizon: int
    mse: float
    mae: float
    param_count: int = 0
    infer_seconds: float = 0.0
    seed: int = 0
    config_hash: str = ""

    def row(self) -> dict:
        return asdict(self)


def eval_report(model: CANet, wb: WindowBatch, seed: int = 0, batch_size: int = 256) -> EvalReport:
    start = time.perf_counter()
    m, a = evaluate(model, wb, batch_size)
    per = (time.perf_counter() - start) / max(len(wb), 1)
    cfg = model.config
    return EvalReport(cfg.horizon, m, a, model.param_count(), per, seed, cfg.config_hash())


def last_value_forecast(inputs: np.ndarray, horizon: int) -> np.ndarray:
    return np.repeat(inputs[..., -1:], horizon, axis=-1)


def seasonal_forecast(inputs: np.ndarray, horizon: int, period: int) -> np.ndarray:
    length = inputs.shape[-1]
    if not 1 <= period <= length:
        raise ConfigError(f"seasonal period {period} must lie in [1, look_back={length}]")
    idx = length - period + (np.arange(horizon) % period)
    return inputs[..., idx]


def naive_baselines(batch: WindowBatch, period: int | None = None) -> dict[str, EvalReport]:
    """Last-value and seasonal-repeat forecasts scored with MSE / MAE."""
    horizon = batch.targets.shape[-1]
    out = {}
    lv = last_value_forecast(batch.inputs, horizon)
    out["last_value"] = EvalReport(horizon, mse(lv, batch.targets), mae(lv, batch.targets))
    if period is not None:
        sv = seasonal_forecast(batch.inputs, horizon, period)
        out["seasonal"] = EvalReport(horizon, mse(sv, batch.targets), mae(sv, batch.targets))
    return out
