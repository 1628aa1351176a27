"""Counter-based random streams.

Draw ``i`` of stream ``s`` under ``seed`` is a pure function of ``(seed, s, i)``:
it is the ``i``-th 64-bit output of a Philox4x64 generator keyed by
``(seed, s)``. Work is split into fixed-size chunks so the numbers a chunk sees
never depend on how many workers process the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np
from scipy.special import ndtri

CHUNK_SIZE = 2048

# stream ids
THETA = 0
NORMAL = 1

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53

T = TypeVar("T")


def _bit_generator(seed: int, stream: int) -> np.random.Philox:
    key = (seed & _MASK64) | ((stream & _MASK64) << 64)
    return np.random.Philox(key=key)


def raw64(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit outputs ``start .. start+count-1`` of the stream."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    bg = _bit_generator(seed, stream)
    # Philox emits four words per counter increment.
    block, offset = divmod(start, 4)
    if block:
        bg.advance(block)
    out = bg.random_raw(offset + count)
    return np.asarray(out[offset:], dtype=np.uint64)


def uniforms(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Uniforms strictly inside (0, 1): the top 53 bits of each word, centred in their cell."""
    words = raw64(seed, stream, start, count)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def normals(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Standard normals by inverse transform of :func:`uniforms`."""
    return ndtri(uniforms(seed, stream, start, count))


def chunk_bounds(total: int, chunk_size: int = CHUNK_SIZE) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk_size, total)) for lo in range(0, total, chunk_size)]


def map_chunks(fn: Callable[[int, int], T], total: int, workers: int = 1,
               chunk_size: int = CHUNK_SIZE) -> list[T]:
    """Apply ``fn(lo, hi)`` to every chunk; results come back in chunk order."""
    bounds = chunk_bounds(total, chunk_size)
    if workers <= 1 or len(bounds) <= 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in bounds]
        return [f.result() for f in futures]


def mean_sd(values: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Compensated mean and sample standard deviation, summed in index order."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n == 0:
        raise ValueError("no values")
    mean = math.fsum(v.tolist()) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum(((v - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var)
