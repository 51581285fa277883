"""Deterministic seed derivation for parallel sample generation.

Every sample and every stochastic stage inside a sample gets its own
64-bit seed derived from (master_seed, index) with a SplitMix64-style
mix, so worker processes never share or coordinate RNG state.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master_seed: int, index: int) -> int:
    """Mix a master seed with a stream index into an independent 64-bit seed."""
    mixed = _splitmix64((master_seed & _MASK) ^ _splitmix64(index & _MASK))
    return mixed


def rng_for(master_seed: int, index: int) -> np.random.Generator:
    """Generator seeded from the derived (master_seed, index) stream."""
    return np.random.default_rng(derive_seed(master_seed, index))
