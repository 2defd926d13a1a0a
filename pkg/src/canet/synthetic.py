"""Seeded synthetic series used by the harnesses and the test suite."""
from __future__ import annotations

import numpy as np

from .data import SeriesFrame, frame_from_array


def sine_trend(t: int = 2000, channels: int = 3, noise: float = 0.1, seed: int = 0) -> SeriesFrame:
    """Two sinusoids plus a linear trend plus Gaussian noise, per channel."""
    rng = np.random.default_rng(seed)
    steps = np.arange(t)
    rows = []
    for _ in range(channels):
        p1, p2 = rng.uniform(12, 30), rng.uniform(40, 90)
        ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
        a1, a2 = rng.uniform(0.5, 1.5), rng.uniform(0.3, 1.0)
        slope = rng.uniform(-1.0, 1.0) / t * 3
        row = a1 * np.sin(2 * np.pi * steps / p1 + ph1) + a2 * np.sin(2 * np.pi * steps / p2 + ph2) + slope * steps
        rows.append(row + noise * rng.standard_normal(t))
    return frame_from_array(np.array(rows))


def regime_switching(
    t: int = 3000,
    channels: int = 2,
    level: float = 2.0,
    switch_prob: float = 0.02,
    noise: float = 0.3,
    seed: int = 0,
) -> SeriesFrame:
    """Mean alternating between ``+level`` and ``-level`` at random switch times.

    A switch always flips the sign of the current level, so the raw level of a
    window tells which way the next jump goes; after per-window z-scoring that
    information is gone.  A short sinusoid and white noise sit on top.
    """
    rng = np.random.default_rng(seed)
    steps = np.arange(t)
    rows = []
    for _ in range(channels):
        state = np.empty(t)
        cur = level if rng.random() < 0.5 else -level
        for i in range(t):
            if rng.random() < switch_prob:
                cur = -cur
            state[i] = cur
        period = rng.uniform(8, 16)
        season = 0.5 * np.sin(2 * np.pi * steps / period + rng.uniform(0, 2 * np.pi))
        rows.append(state + season + noise * rng.standard_normal(t))
    return frame_from_array(np.array(rows))


def long_memory(t: int = 4000, channels: int = 2, noise: float = 0.2, seed: int = 0) -> SeriesFrame:
    """A slow cycle (period ~ 150-250) plus a fast one; short look-backs miss the slow phase."""
    rng = np.random.default_rng(seed)
    steps = np.arange(t)
    rows = []
    for _ in range(channels):
        slow = rng.uniform(150, 250)
        fast = rng.uniform(10, 20)
        row = 1.5 * np.sin(2 * np.pi * steps / slow + rng.uniform(0, 2 * np.pi))
        row += 0.5 * np.sin(2 * np.pi * steps / fast + rng.uniform(0, 2 * np.pi))
        rows.append(row + noise * rng.standard_normal(t))
    return frame_from_array(np.array(rows))


def white_noise(t: int = 1000, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(t)


def random_walk(t: int = 1000, seed: int = 0) -> np.ndarray:
    return np.cumsum(np.random.default_rng(seed).standard_normal(t))
