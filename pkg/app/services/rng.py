"""Seeded random number generation and sampling primitives

Every engine draws from a numpy ``Generator`` backed by the PCG64 bit
generator. PCG64 is a fixed, documented algorithm, so a seed fully determines
the stream on every platform. The run index is used as the seed.
"""

from typing import Optional, Union

import numpy as np
from scipy.stats import qmc

from app.core.errors import ArgumentError


RngState = np.random.Generator
Size = Optional[Union[int, tuple]]


def seed_rng(seed: int) -> RngState:
    """
    Create an independent generator for one logical stream

    Args:
        seed: Non-negative integer seed (the run index for benchmark runs)

    Returns:
        Generator whose output is a pure function of the seed
    """
    if int(seed) < 0:
        raise ArgumentError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_normal(rng: RngState, mean, sigma: float, size: Size = None):
    """Draw from N(mean, sigma^2); sigma = 0 returns the mean exactly."""
    if sigma < 0:
        raise ArgumentError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        if size is None:
            return float(mean) if np.ndim(mean) == 0 else np.array(mean, dtype=float)
        return np.broadcast_to(np.asarray(mean, dtype=float), size).copy()
    return rng.normal(mean, sigma, size)


def sample_cauchy(rng: RngState, location, scale: float, size: Size = None):
    """Draw raw values from Cauchy(location, scale)."""
    if not scale > 0:
        raise ArgumentError(f"scale must be > 0, got {scale}")
    return location + scale * rng.standard_cauchy(size)


def latin_hypercube(rng: RngState, n: int, d: int, lower, upper) -> np.ndarray:
    """
    Latin hypercube sample of n points in the box [lower, upper]

    Args:
        rng: Generator consumed by the sampler
        n: Number of points
        d: Dimension
        lower: Lower bounds, scalar or length-d vector
        upper: Upper bounds, scalar or length-d vector

    Returns:
        (n, d) array with exactly one point per stratum in every dimension
    """
    if n < 1 or d < 1:
        raise ArgumentError(f"latin hypercube needs n >= 1 and d >= 1, got n={n}, d={d}")
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (d,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (d,))
    if np.any(~(lower < upper)):
        raise ArgumentError("latin hypercube bounds must satisfy lower < upper in every dimension")

    sampler = qmc.LatinHypercube(d=d, rng=rng)
    unit = sampler.random(n)
    return qmc.scale(unit, lower, upper)
