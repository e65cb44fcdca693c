"""Seed-addressed, chunked Monte Carlo driver.

A run of ``trials`` samples is cut into chunks whose size depends only on the
work per trial. Chunk ``i`` draws from the generator addressed by
``(seed, *path, i)``, and chunk results are returned in chunk order, so
the outcome never depends on how many worker threads were used.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")

CHUNK_FLOATS = 1 << 21
MIN_CHUNK = 256
MAX_CHUNK = 1 << 16


def stream(seed: int, *path: int) -> np.random.Generator:
    parts = [int(seed), *(int(part) for part in path)]
    if any(value < 0 for value in parts):
        raise ValueError(f"seed and stream path must be nonnegative, got {parts}")
    # SeedSequence zero-pads short entropy, so the path length is mixed in
    return np.random.default_rng(np.random.SeedSequence([parts[0], len(path), *parts[1:]]))


def chunk_size_for(floats_per_trial: int) -> int:
    """Trials per chunk so one chunk stays near ``CHUNK_FLOATS`` random draws."""
    per_trial = max(1, int(floats_per_trial))
    return int(min(MAX_CHUNK, max(MIN_CHUNK, CHUNK_FLOATS // per_trial)))


def chunk_sizes(trials: int, chunk: int) -> List[int]:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    full, rest = divmod(int(trials), int(chunk))
    return [chunk] * full + ([rest] if rest else [])


def run_chunked(
    work: Callable[[np.random.Generator, int], T],
    trials: int,
    seed: int,
    path: Sequence[int] = (),
    chunk: int = MAX_CHUNK,
    workers: int = 1,
) -> List[T]:
    """Apply ``work(rng, size)`` to every chunk and return results in chunk order."""
    sizes = chunk_sizes(trials, chunk)

    def task(index: int) -> T:
        result = work(stream(seed, *path, index), sizes[index])
        logger.debug("chunk %d/%d done (%d trials, path=%s)", index + 1, len(sizes), sizes[index], tuple(path))
        return result

    if workers <= 1 or len(sizes) == 1:
        return [task(index) for index in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(len(sizes))))


def sign(values: np.ndarray) -> np.ndarray:
    """Sign with sgn(0) = +1, as int8."""
    return np.where(values >= 0, 1, -1).astype(np.int8)
