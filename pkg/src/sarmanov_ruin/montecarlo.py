"""Chunked, seeded Monte Carlo execution.

A run of ``N`` draws is cut into chunks of ``chunk_size``.  Chunk ``j`` of
logical stream ``s`` draws from ``PCG64(SeedSequence(root_seed, spawn_key=(s, j)))``,
so its numbers depend only on ``(root_seed, s, j)``.  Chunk results are
integer counts merged by summation in chunk order, which makes the final
estimate independent of the worker count and of scheduling.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .errors import ParameterError

WORKERS_ENV = "SARMANOV_RUIN_WORKERS"
DEFAULT_CHUNK = 500_000

# logical stream ids; distinct experiments on the same root seed stay independent
STREAM_PAIRS = 0
STREAM_TWISTED = 1
STREAM_MARGINAL = 2
STREAM_HILL = 3


def chunk_rng(root_seed: int, chunk_index: int, stream: int = STREAM_PAIRS) -> np.random.Generator:
    if root_seed < 0 or root_seed >= 2 ** 64:
        raise ParameterError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(int(root_seed), spawn_key=(int(stream), int(chunk_index)))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(N: int, chunk_size: int = DEFAULT_CHUNK) -> list[int]:
    if N < 1:
        raise ParameterError("N must be >= 1")
    if chunk_size < 1:
        raise ParameterError("chunk_size must be >= 1")
    full, rest = divmod(int(N), int(chunk_size))
    return [int(chunk_size)] * full + ([rest] if rest else [])


def resolve_workers(requested: int | None = None) -> tuple[int, str]:
    """Worker count and where it came from; the environment variable wins."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ParameterError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        return max(1, value), "env"
    if requested is None:
        return 1, "default"
    return max(1, int(requested)), "flag"


def _run_one(task):
    fn, root_seed, stream, index, size, args = task
    return fn(chunk_rng(root_seed, index, stream), size, *args)


def run_chunks(fn: Callable, N: int, root_seed: int, *, args: tuple = (), stream: int = STREAM_PAIRS,
               chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> list:
    """Apply ``fn(rng, size, *args)`` to every chunk; results come back in chunk order.

    ``fn`` and ``args`` must be picklable when ``workers > 1``.
    """
    tasks = [(fn, root_seed, stream, j, m, args) for j, m in enumerate(chunk_sizes(N, chunk_size))]
    if workers <= 1 or len(tasks) == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_one, tasks))


def merge_counts(results: list) -> np.ndarray:
    """Sum integer count arrays; integer addition is exact and order-free."""
    total = np.zeros_like(np.asarray(results[0], dtype=np.int64))
    for r in results:
        total = total + np.asarray(r, dtype=np.int64)
    return total
