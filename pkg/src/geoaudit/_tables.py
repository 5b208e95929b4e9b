"""Multi-index bookkeeping for dense jets.

Multi-indices are stored graded-lexicographically: all indices of total
degree 0, then degree 1, and so on.  Truncating a jet to a lower order is
therefore a prefix slice of its coefficient array.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np


@lru_cache(maxsize=None)
def ncoef(dim: int, order: int) -> int:
    return comb(dim + order, dim)


def _compositions(total: int, dim: int):
    # descending lexicographic order within one degree
    if dim == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, dim - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def multi_indices(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for d in range(order + 1):
        out.extend(_compositions(d, dim))
    return tuple(out)


@lru_cache(maxsize=None)
def index_of(dim: int, order: int) -> dict:
    return {a: k for k, a in enumerate(multi_indices(dim, order))}


@lru_cache(maxsize=None)
def factorials(dim: int, order: int) -> np.ndarray:
    """``alpha!`` for every multi-index, in storage order."""
    return np.array(
        [np.prod([factorial(a) for a in alpha]) for alpha in multi_indices(dim, order)],
        dtype=float,
    )


@lru_cache(maxsize=None)
def product_table(dim: int, order: int):
    """Triplets ``(i, j, k)`` with ``alpha_i + beta_j = gamma_k``, sorted by ``k``.

    Also returns the start offset of each ``k`` group (for ``reduceat``).
    """
    idx = multi_indices(dim, order)
    lookup = index_of(dim, order)
    I, J, K = [], [], []
    for k, gamma in enumerate(idx):
        for i, alpha in enumerate(idx):
            if sum(alpha) > sum(gamma):
                break
            if all(a <= g for a, g in zip(alpha, gamma)):
                beta = tuple(g - a for a, g in zip(alpha, gamma))
                I.append(i)
                J.append(lookup[beta])
                K.append(k)
    I = np.array(I, dtype=np.intp)
    J = np.array(J, dtype=np.intp)
    K = np.array(K, dtype=np.intp)
    starts = np.searchsorted(K, np.arange(len(idx)))
    for arr in (I, J, K, starts):
        arr.setflags(write=False)
    return I, J, K, starts


@lru_cache(maxsize=None)
def lower_table(dim: int, order: int, axis: int):
    """Source indices and factors for differentiating along ``axis``.

    For each multi-index ``alpha`` of the order-``order - 1`` result:
    ``out[alpha] = (alpha_axis + 1) * c[alpha + e_axis]``.
    """
    lookup = index_of(dim, order)
    src, fac = [], []
    for alpha in multi_indices(dim, order - 1):
        up = list(alpha)
        up[axis] += 1
        src.append(lookup[tuple(up)])
        fac.append(alpha[axis] + 1.0)
    src = np.array(src, dtype=np.intp)
    fac = np.array(fac, dtype=float)
    src.setflags(write=False)
    fac.setflags(write=False)
    return src, fac
