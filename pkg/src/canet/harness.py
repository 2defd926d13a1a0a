"""Experiment harnesses: ablation, normalization swap, noise and look-back sweeps, paired t-test.

Every harness returns a list of row dicts; :func:`write_csv` and
:func:`write_manifest` persist them with a JSON run manifest.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.special import stdtr

from .data import NoiseSpec, SeriesFrame, add_noise, split_points
from .errors import ConfigError, ContractError
from .model import CANet, ModelConfig
from .train import Splits, TrainConfig, evaluate, mae, mse, predict, prepare, train

log = logging.getLogger(__name__)

ABLATION_VARIANTS = ("full", "w/o ASB", "w/o ICB", "w/o MRP", "w/o BG")
ABLATION_HEADER = ("variant", "seed", "horizon", "val_mse", "val_mae", "test_mse", "test_mae", "params")
NORM_HEADER = ("norm", "seed", "horizon", "val_mse", "test_mse", "test_mae", "params")
NOISE_HEADER = ("level", "horizon", "mse", "mae")
LOOKBACK_HEADER = ("look_back", "horizon", "mse", "mae")
DEFAULT_NOISE_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_LOOKBACKS = (24, 48, 96, 192, 336)


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("CANET_THREADS", "1")))
    except ValueError:
        raise ConfigError(f"CANET_THREADS must be an integer, got {os.environ['CANET_THREADS']!r}") from None


def _map(fn, items):
    items = list(items)
    workers = min(max_threads(), len(items)) or 1
    if workers == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def variant_config(base: ModelConfig, variant: str) -> ModelConfig:
    flags = {
        "full": {},
        "w/o ASB": {"use_asb": False},
        "w/o ICB": {"use_icb": False},
        "w/o MRP": {"use_mrp": False},
        "w/o BG": {"use_blending_gate": False},
    }
    if variant not in flags:
        raise ConfigError(f"unknown ablation variant {variant!r}")
    return replace(base, **flags[variant])


def fit(config: ModelConfig, splits: Splits, tcfg: TrainConfig) -> tuple[CANet, object]:
    model = CANet(config)
    hist = train(model, splits.train, splits.val, tcfg)
    return model, hist


def run_ablation(
    base: ModelConfig,
    frame: SeriesFrame,
    tcfg: TrainConfig,
    seeds=(0,),
    variants=ABLATION_VARIANTS,
) -> list[dict]:
    """Train every variant under the same seeds; one row per (variant, seed)."""
    splits = prepare(frame, base.look_back, base.horizon)
    jobs = [(v, s) for s in seeds for v in variants]

    def job(item):
        variant, seed = item
        cfg = replace(variant_config(base, variant), seed=seed)
        model, hist = fit(cfg, splits, replace(tcfg, seed=seed))
        vm, va = evaluate(model, splits.val, tcfg.eval_batch_size)
        tm, ta = evaluate(model, splits.test, tcfg.eval_batch_size)
        log.info("ablation %s seed=%d val_mse=%.5f", variant, seed, vm)
        return {
            "variant": variant,
            "seed": seed,
            "horizon": cfg.horizon,
            "val_mse": vm,
            "val_mae": va,
            "test_mse": tm,
            "test_mae": ta,
            "params": model.param_count(),
        }

    return _map(job, jobs)


def run_norm_swap(base: ModelConfig, frame: SeriesFrame, tcfg: TrainConfig, seeds=(0,), kinds=("nsan", "layer", "batch", "instance")) -> list[dict]:
    """Same backbone with NSAN replaced by LN / BN / IN."""
    splits = prepare(frame, base.look_back, base.horizon)

    def job(item):
        kind, seed = item
        cfg = replace(base, norm_kind=kind, seed=seed)
        model, hist = fit(cfg, splits, replace(tcfg, seed=seed))
        tm, ta = evaluate(model, splits.test, tcfg.eval_batch_size)
        return {"norm": kind, "seed": seed, "horizon": cfg.horizon, "val_mse": hist.best_val_mse, "test_mse": tm, "test_mae": ta, "params": model.param_count()}

    return _map(job, [(k, s) for s in seeds for k in kinds])


def run_noise_sweep(model: CANet, splits: Splits, levels=DEFAULT_NOISE_LEVELS, seed: int = 0, batch_size: int = 256) -> list[dict]:
    """Evaluate ``model`` on test inputs perturbed by ``level * N(0, 1)``.

    The same Gaussian draw is reused across levels so rows differ only in scale.
    """
    rows = []
    for level in levels:
        noisy = add_noise(splits.test.inputs, NoiseSpec(float(level), seed))
        pred = predict(model, noisy, batch_size)
        rows.append({"level": float(level), "horizon": model.config.horizon, "mse": mse(pred, splits.test.targets), "mae": mae(pred, splits.test.targets)})
    return rows


def run_lookback_sweep(base: ModelConfig, frame: SeriesFrame, tcfg: TrainConfig, look_backs=DEFAULT_LOOKBACKS) -> list[dict]:
    """Train one model per look-back at fixed horizon; too-long windows are skipped with a warning."""
    a, b = split_points(frame.length)
    shortest = min(a, b - a, frame.length - b)

    def job(lb):
        if lb + base.horizon > shortest:
            warnings.warn(f"look_back {lb} + horizon {base.horizon} exceeds a split segment; skipped")
            return None
        patches = [p for p in base.patch_sizes if p <= lb] or [lb]
        cfg = replace(base, look_back=lb, patch_sizes=patches)
        splits = prepare(frame, lb, base.horizon)
        model, _ = fit(cfg, splits, tcfg)
        tm, ta = evaluate(model, splits.test, tcfg.eval_batch_size)
        return {"look_back": lb, "horizon": base.horizon, "mse": tm, "mae": ta}

    return [r for r in _map(job, look_backs) if r is not None]


def paired_t_test(a, b) -> tuple[float, float]:
    """Paired t-test on ``a - b``.

    Returns the mean difference and the one-sided p-value for the alternative
    ``mean(a - b) < 0`` (``a`` is better when lower).  The Student-t CDF is
    ``scipy.special.stdtr``.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractError(f"need two equal-length vectors with at least 2 entries, got {a.shape} and {b.shape}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 0.5
        raise ContractError("differences have zero variance; t statistic undefined")
    t = mean / (sd / math.sqrt(d.size))
    return mean, float(stdtr(d.size - 1, t))


# -- output -------------------------------------------------------------------


def write_csv(rows: list[dict], path, header=None) -> None:
    header = list(header or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k) for k in header})


def content_hash(paths) -> str:
    h = hashlib.sha256()
    for p in sorted(str(p) for p in paths):
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def write_manifest(path, *, command: str, model: ModelConfig | None = None, train_config: TrainConfig | None = None, inputs=(), extra=None) -> dict:
    manifest = {
        "command": command,
        "seed": (model.seed if model is not None else None),
        "config_hash": model.config_hash() if model is not None else None,
        "model_config": model.to_dict() if model is not None else None,
        "train_config": train_config.to_dict() if train_config is not None else None,
        "inputs": [str(p) for p in inputs],
        "input_hash": content_hash(inputs) if inputs else None,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
