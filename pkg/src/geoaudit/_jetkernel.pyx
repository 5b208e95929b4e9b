# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled truncated Cauchy product for dense jets."""
import numpy as np
cimport cython

ctypedef fused scalar_t:
    double
    double complex


def cauchy_product(const scalar_t[:, ::1] a, const scalar_t[:, ::1] b,
                   const Py_ssize_t[::1] I, const Py_ssize_t[::1] J,
                   const Py_ssize_t[::1] K,
                   Py_ssize_t nout):
    """out[K[t], :] += a[I[t], :] * b[J[t], :] for every triplet t."""
    cdef Py_ssize_t ntrip = I.shape[0]
    cdef Py_ssize_t nb = a.shape[1]
    cdef Py_ssize_t t, s, i, j, k
    if scalar_t is double:
        out = np.zeros((nout, nb), dtype=np.float64)
    else:
        out = np.zeros((nout, nb), dtype=np.complex128)
    cdef scalar_t[:, ::1] o = out
    with nogil:
        for t in range(ntrip):
            i = I[t]
            j = J[t]
            k = K[t]
            for s in range(nb):
                o[k, s] += a[i, s] * b[j, s]
    return out
