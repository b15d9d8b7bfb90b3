"""Deterministic seed derivation.

Every randomized step in the package draws from a generator seeded by
``derive_seed(master_seed, tag)`` so that independent steps never share or
shift each other's random streams.
"""

import hashlib

import numpy as np


def derive_seed(master_seed: int, tag: str) -> int:
    """Derive a 64-bit seed from a master seed and a step tag.

    Pure function: the same (master_seed, tag) always yields the same seed,
    on every platform.
    """
    digest = hashlib.sha256(f"{master_seed:d}|{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(master_seed: int, tag: str) -> np.random.Generator:
    """Generator seeded from (master_seed, tag)."""
    return np.random.default_rng(derive_seed(master_seed, tag))
