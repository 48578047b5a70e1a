"""Compiled brute-force nearest-neighbor kernels.

Contracts mirror `privtext._kernels.nn_numpy` exactly: squared Euclidean
distance, argmin with ties resolved to the lowest row index.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def backend_name():
    return "cython"


def sq_distances(const double[:, ::1] matrix, const double[::1] query):
    """Squared Euclidean distance from query to every row of matrix."""
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double acc, diff
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                diff = matrix[i, j] - query[j]
                acc += diff * diff
            ov[i] = acc
    return out


def nearest_index(const double[:, ::1] matrix, const double[::1] query, excluded=None):
    """Row index closest to query; ties broken by lowest index.

    excluded: optional uint8 mask; rows with a nonzero entry are skipped.
    Raises ValueError when every row is excluded.
    """
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    cdef const cnp.uint8_t[::1] mask
    cdef bint has_mask = excluded is not None
    if has_mask:
        mask = np.ascontiguousarray(excluded, dtype=np.uint8)
        if mask.shape[0] != n:
            raise ValueError("exclusion mask length != row count")
    else:
        mask = np.empty(0, dtype=np.uint8)
    cdef Py_ssize_t i, j
    cdef Py_ssize_t best = -1
    cdef double acc, diff
    cdef double best_d = INFINITY
    with nogil:
        for i in range(n):
            if has_mask and mask[i]:
                continue
            acc = 0.0
            for j in range(d):
                diff = matrix[i, j] - query[j]
                acc += diff * diff
                if acc > best_d:
                    break
            if acc < best_d or best < 0:
                best_d = acc
                best = i
    if best < 0:
        raise ValueError("all rows excluded")
    return best


def nearest_index_batch(const double[:, ::1] matrix, const double[:, ::1] queries):
    """nearest_index applied to each row of queries (no exclusions)."""
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    cdef Py_ssize_t m = queries.shape[0]
    if queries.shape[1] != d:
        raise ValueError("query dimension mismatch")
    if n == 0:
        raise ValueError("empty matrix")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    cdef Py_ssize_t q, i, j, best
    cdef double acc, diff, best_d
    with nogil:
        for q in range(m):
            best = 0
            acc = 0.0
            for j in range(d):
                diff = matrix[0, j] - queries[q, j]
                acc += diff * diff
            best_d = acc
            for i in range(1, n):
                acc = 0.0
                for j in range(d):
                    diff = matrix[i, j] - queries[q, j]
                    acc += diff * diff
                    if acc > best_d:
                        break
                if acc < best_d:
                    best_d = acc
                    best = i
            ov[q] = best
    return out
