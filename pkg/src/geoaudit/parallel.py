"""Point-parallel evaluation capped by ``GEOAUDIT_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    raw = os.environ.get("GEOAUDIT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, min(n, os.cpu_count() or 1))


def map_points(fn, points: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Apply ``fn`` to row-chunks of ``points``; results concatenate on the last axis.

    Chunks are assembled in input order regardless of completion order.
    """
    points = np.asarray(points)
    n = len(points)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    threads = thread_count()
    if threads == 1 or len(bounds) == 1:
        parts = [fn(points[a:b]) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: fn(points[ab[0] : ab[1]]), bounds))
    return np.concatenate(parts, axis=-1)
