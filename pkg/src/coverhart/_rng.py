"""Block-seeded random streams.

A draw of ``n`` variates is cut into fixed blocks of :data:`BLOCK_SIZE`;
block ``b`` of stream ``s`` under ``seed`` gets its own generator seeded
from ``(seed, *s, b)``. Blocks are concatenated in index order, so the
output never depends on how many workers produced it.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .exceptions import InvalidParameter

BLOCK_SIZE = 4096
_MASK64 = (1 << 64) - 1


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidParameter(f"seed: expected an integer, got {seed!r}")
    return int(seed) & _MASK64


def check_count(name: str, n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParameter(f"{name}: expected a positive integer, got {n!r}")
    return int(n)


def block_generator(seed: int, stream: Sequence[int], block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(*stream, block))
    return np.random.Generator(np.random.PCG64(ss))


def blocked_draw(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    seed: int,
    stream: Sequence[int] = (),
    n_jobs: int = 1,
) -> np.ndarray:
    """Draw ``n`` variates block by block; ``n_jobs`` only changes speed."""
    n = check_count("n", n)
    stream = tuple(int(s) for s in stream)
    sizes = [min(BLOCK_SIZE, n - start) for start in range(0, n, BLOCK_SIZE)]

    def one(block):
        return draw(block_generator(seed, stream, block), sizes[block])

    workers = n_jobs if n_jobs and n_jobs > 0 else (os.cpu_count() or 1)
    if workers == 1 or len(sizes) == 1:
        parts = [one(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    return np.concatenate(parts, axis=0)
