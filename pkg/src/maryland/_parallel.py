"""Deterministic chunked evaluation over a thread pool.

Chunk boundaries depend only on the input length, and results are reassembled
in input order before any reduction, so the thread count never changes a result.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 64


def map_chunks(fn, xs, threads: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Apply ``fn`` (array -> array of equal length) to fixed-size slices of ``xs``."""
    xs = np.asarray(xs)
    slices = [xs[i:i + chunk] for i in range(0, len(xs), chunk)]
    if threads <= 1 or len(slices) <= 1:
        parts = [fn(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, slices))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def map_items(fn, items, threads: int = 1) -> list:
    """Ordered ``[fn(x) for x in items]``, optionally on a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
