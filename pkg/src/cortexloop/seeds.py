"""Deterministic per-component RNG derivation from one root seed.

Every randomized component gets its own generator keyed by a stable label,
so adding a consumer never shifts another component's stream.
"""

from __future__ import annotations

import zlib

import numpy as np


def rng_for(root_seed: int, label: str, index: int = 0) -> np.random.Generator:
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=(key, index)))
