"""Root-seed expansion.

One integer seed drives every random stream.  ``numpy.random.SeedSequence(seed)``
is spawned into four children, always in this order:

    0. init     parameter initialization
    1. shuffle  training-window order
    2. dropout  dropout masks
    3. noise    noise injection in robustness sweeps

Each child seeds an independent ``numpy.random.Generator`` (PCG64).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STREAMS = ("init", "shuffle", "dropout", "noise")


@dataclass
class RngStreams:
    init: np.random.Generator
    shuffle: np.random.Generator
    dropout: np.random.Generator
    noise: np.random.Generator


def split_seed(seed: int) -> RngStreams:
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAMS))
    return RngStreams(*(np.random.default_rng(c) for c in children))
