"""Pure-numpy nearest-neighbor kernels (fallback backend).

Same contracts as the compiled `_nncore` module: squared Euclidean distance,
argmin with ties resolved to the lowest row index. Batch queries use the
norm-trick (``|v|^2 - 2 v.q``) through BLAS, chunked to bound memory.
"""

from __future__ import annotations

import numpy as np

_BATCH_CHUNK = 4096


def backend_name() -> str:
    return "numpy"


def sq_distances(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from query to every row of matrix."""
    diff = matrix - query[None, :]
    return np.einsum("ij,ij->i", diff, diff)


def nearest_index(matrix: np.ndarray, query: np.ndarray, excluded=None) -> int:
    """Row index closest to query; ties broken by lowest index.

    excluded: optional boolean/uint8 mask; masked rows are skipped.
    Raises ValueError when every row is excluded.
    """
    d2 = sq_distances(matrix, query)
    if excluded is not None:
        excluded = np.asarray(excluded, dtype=bool)
        if excluded.shape[0] != matrix.shape[0]:
            raise ValueError("exclusion mask length != row count")
        if excluded.all():
            raise ValueError("all rows excluded")
        d2 = np.where(excluded, np.inf, d2)
    return int(np.argmin(d2))


def nearest_index_batch(matrix: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """nearest_index applied to each row of queries (no exclusions)."""
    if queries.shape[1] != matrix.shape[1]:
        raise ValueError("query dimension mismatch")
    if matrix.shape[0] == 0:
        raise ValueError("empty matrix")
    norms = np.einsum("ij,ij->i", matrix, matrix)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], _BATCH_CHUNK):
        chunk = queries[start : start + _BATCH_CHUNK]
        # |m - q|^2 = |m|^2 - 2 m.q + |q|^2; the |q|^2 term is constant per row.
        scores = norms[None, :] - 2.0 * (chunk @ matrix.T)
        out[start : start + _BATCH_CHUNK] = np.argmin(scores, axis=1)
    return out
