# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batch small-matrix ops and assembly scatter.

Mirrors the signatures in _numpy_backend; accumulation order is the flat
iteration order, so results match the fallback bit for bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def batch_det(F):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] A = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef int d = A.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    if d == 2:
        for i in range(n):
            out[i] = A[i, 0, 0] * A[i, 1, 1] - A[i, 0, 1] * A[i, 1, 0]
    elif d == 3:
        for i in range(n):
            out[i] = (
                A[i, 0, 0] * (A[i, 1, 1] * A[i, 2, 2] - A[i, 1, 2] * A[i, 2, 1])
                - A[i, 0, 1] * (A[i, 1, 0] * A[i, 2, 2] - A[i, 1, 2] * A[i, 2, 0])
                + A[i, 0, 2] * (A[i, 1, 0] * A[i, 2, 1] - A[i, 1, 1] * A[i, 2, 0])
            )
    else:
        raise ValueError("only d in {2, 3} supported")
    return out


def batch_cofactor(F):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] A = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef int d = A.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] C = np.empty_like(A)
    cdef Py_ssize_t i
    if d == 2:
        for i in range(n):
            C[i, 0, 0] = A[i, 1, 1]
            C[i, 0, 1] = -A[i, 1, 0]
            C[i, 1, 0] = -A[i, 0, 1]
            C[i, 1, 1] = A[i, 0, 0]
    elif d == 3:
        for i in range(n):
            C[i, 0, 0] = A[i, 1, 1] * A[i, 2, 2] - A[i, 1, 2] * A[i, 2, 1]
            C[i, 0, 1] = A[i, 1, 2] * A[i, 2, 0] - A[i, 1, 0] * A[i, 2, 2]
            C[i, 0, 2] = A[i, 1, 0] * A[i, 2, 1] - A[i, 1, 1] * A[i, 2, 0]
            C[i, 1, 0] = A[i, 0, 2] * A[i, 2, 1] - A[i, 0, 1] * A[i, 2, 2]
            C[i, 1, 1] = A[i, 0, 0] * A[i, 2, 2] - A[i, 0, 2] * A[i, 2, 0]
            C[i, 1, 2] = A[i, 0, 1] * A[i, 2, 0] - A[i, 0, 0] * A[i, 2, 1]
            C[i, 2, 0] = A[i, 0, 1] * A[i, 1, 2] - A[i, 0, 2] * A[i, 1, 1]
            C[i, 2, 1] = A[i, 0, 2] * A[i, 1, 0] - A[i, 0, 0] * A[i, 1, 2]
            C[i, 2, 2] = A[i, 0, 0] * A[i, 1, 1] - A[i, 0, 1] * A[i, 1, 0]
    else:
        raise ValueError("only d in {2, 3} supported")
    return C


def scatter_add(out, rows, values):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o = out
    cdef cnp.ndarray[cnp.int64_t, ndim=1] r = np.ascontiguousarray(rows, dtype=np.int64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = r.shape[0]
    for i in range(n):
        o[r[i]] += v[i]
    return out
