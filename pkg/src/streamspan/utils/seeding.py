"""
streamspan.utils.seeding
~~~~~~~~~~~~~~~~~~~~~~~~
Deterministic seed derivation. Every random draw in the package goes through
`derive_seed` so runs replay identically across processes and platforms.
"""
from __future__ import annotations

import hashlib
from typing import Any

import numpy as np

SEED_MASK = (1 << 63) - 1


def derive_seed(seed: int, *labels: Any) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little") & SEED_MASK


def rng_for(seed: int, *labels: Any) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))
