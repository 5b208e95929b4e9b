"""Backend selection for the jet product kernel.

The compiled extension is used when it imports; otherwise (or when
``GEOAUDIT_PURE_PYTHON=1``) a numpy implementation takes over.  Both
compute the same truncated Cauchy product.
"""
from __future__ import annotations

import os

import numpy as np

from ._tables import product_table


def cauchy_product_numpy(a, b, I, J, K, starts, nout):
    prod = a[I] * b[J]
    return np.add.reduceat(prod, starts, axis=0)


try:
    from ._jetkernel import cauchy_product as _compiled_product
except ImportError:  # extension not built
    _compiled_product = None

_backend = "python"
if _compiled_product is not None and os.environ.get("GEOAUDIT_PURE_PYTHON", "") not in ("1", "true"):
    _backend = "compiled"


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled_product is not None else [])


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _backend = name


def mul_coeffs(a: np.ndarray, b: np.ndarray, dim: int, order: int) -> np.ndarray:
    """Truncated product of two coefficient blocks of shape ``(ncoef, B)``."""
    I, J, K, starts = product_table(dim, order)
    nout = len(starts)
    if a.dtype != b.dtype:
        a = a.astype(np.complex128)
        b = b.astype(np.complex128)
    if _backend == "compiled":
        return _compiled_product(
            np.ascontiguousarray(a), np.ascontiguousarray(b), I, J, K, nout
        )
    return cauchy_product_numpy(a, b, I, J, K, starts, nout)
