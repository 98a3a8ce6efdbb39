"""Portable seeded random streams.

Every random draw in the package goes through this module so that a
``(seed, params)`` pair pins the output bit-for-bit.

* Bit generator: PCG64 (``numpy.random.PCG64``) seeded from a
  ``numpy.random.SeedSequence`` built on the 64-bit user seed.
* Uniforms: ``Generator.random`` (53-bit doubles in [0, 1)).
* Gaussians: Box-Muller on pairs of uniforms. ``Generator.standard_normal``
  (ziggurat) is avoided on purpose, its stream is not covered by numpy's
  stability policy.
* Permutations: stable argsort of uniforms.
* Child seeds: ``SeedSequence(seed, spawn_key=key)``, so trial ``i`` of a run
  never depends on how many trials ran before it or on which thread.
"""

from __future__ import annotations

import numpy as np

from sparserec.errors import InvalidArgumentError

SEED_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed for the stream labelled ``key``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def uniform(rng: np.random.Generator, size) -> np.ndarray:
    return rng.random(size)


def normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal variates via Box-Muller."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape, dtype=np.int64))
    pairs = (count + 1) // 2
    u = rng.random((pairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
    angle = 2.0 * np.pi * u[:, 1]
    z = np.empty((pairs, 2))
    z[:, 0] = radius * np.cos(angle)
    z[:, 1] = radius * np.sin(angle)
    return z.reshape(-1)[:count].reshape(shape)


def signs(rng: np.random.Generator, size) -> np.ndarray:
    return np.where(rng.random(size) < 0.5, -1.0, 1.0)


def permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.argsort(rng.random(n), kind="stable")
