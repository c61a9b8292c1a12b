"""Deterministic RNG derivation.

Every independent unit of work (trial, estimator seed index) gets its
own generator spawned from (master seed, counter key), so parallel and
serial schedules consume identical streams.
"""

from __future__ import annotations

import numpy as np


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    )
