"""Seeded random number generation.

All stochastic code in the package draws from Philox counter-based
generators through this module, with Gaussians produced by Box-Muller
on uniform draws. This keeps every test vector exactly reproducible
from (seed, stream) alone.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for the given (seed, stream) pair."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal draws via Box-Muller."""
    count = int(np.prod(shape)) if shape else 1
    half = (count + 1) // 2
    # 1 - u keeps the log argument in (0, 1]
    u1 = 1.0 - rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
    return z.reshape(shape)
