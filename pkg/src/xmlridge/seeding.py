"""Deterministic derivation of per-purpose random seeds.

Every randomized step (validation split, SVD range finding, random
projection) draws from its own named substream of the single top-level
seed, so adding or removing one step never perturbs the others.
"""

from __future__ import annotations

import numpy as np

_STREAM_IDS = {"split": 0, "svd": 1, "projection": 2}


def substream_seed(seed: int, name: str) -> int:
    """Derive the integer seed for the named substream of ``seed``."""
    try:
        key = _STREAM_IDS[name]
    except KeyError:
        raise ValueError(f"unknown random substream {name!r}") from None
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(key,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
