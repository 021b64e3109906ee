"""Deterministic sharded random streams.

Every Monte Carlo routine splits its sample budget into a fixed number of
shards.  Shard ``i`` draws from ``Philox`` seeded by the ``i``-th child of
``SeedSequence(seed)``, so results depend only on ``(seed, shards)`` and
never on how many threads execute the shards.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SHARDS = 8
THREADS_ENV = "HYPCONVEX_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def shard_sizes(total: int, shards: int) -> list[int]:
    shards = max(1, min(shards, total)) if total > 0 else 1
    base, extra = divmod(total, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def shard_generators(seed: int, shards: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(shards)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def map_shards(fn, seed: int, total: int, shards: int = DEFAULT_SHARDS,
               threads: int | None = None) -> list:
    """Run ``fn(rng, size)`` once per shard and return the results in shard order."""
    sizes = shard_sizes(total, shards)
    gens = shard_generators(seed, len(sizes))
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(sizes) == 1:
        return [fn(g, s) for g, s in zip(gens, sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, gens, sizes))


def uniform_sphere(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    """``size`` uniform points on the unit sphere in R^n (Gaussian normalize)."""
    x = rng.standard_normal((size, n))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    # zero vectors have probability zero but guard anyway
    norms[norms == 0] = 1.0
    return x / norms
