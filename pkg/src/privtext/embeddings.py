"""Word-vector store: lookups, distances, nearest neighbors, covariance.

Vector files use the word2vec text layout (``word v1 v2 ... vd`` per line).
An optional binary cache (versioned header, little-endian f32 rows) speeds up
repeated loads of large vocabularies.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from privtext import _kernels

_CACHE_MAGIC = b"PTEC"
_CACHE_VERSION = 1


class EmbeddingError(ValueError):
    pass


@dataclass
class VectorLoadReport:
    path: str
    n_loaded: int = 0
    n_rejected: int = 0
    rejected_lines: list[int] | None = None

    def as_dict(self) -> dict:
        return {
            "path": self.path,
            "loaded": self.n_loaded,
            "rejected": self.n_rejected,
            "rejected_lines": self.rejected_lines or [],
        }


class EmbeddingStore:
    """Immutable vocabulary of d-dimensional word vectors.

    Rows are float64 and C-contiguous so both kernel backends can consume
    them directly; per-row Euclidean norms are cached for the batch path.
    """

    def __init__(self, words: list[str], matrix: np.ndarray):
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise EmbeddingError("matrix must be 2-D")
        if len(words) != matrix.shape[0]:
            raise EmbeddingError("word count != row count")
        if len(set(words)) != len(words):
            raise EmbeddingError("duplicate words in vocabulary")
        if not np.isfinite(matrix).all():
            raise EmbeddingError("non-finite values in matrix")
        self.words: tuple[str, ...] = tuple(words)
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.dim: int = matrix.shape[1]
        self.norms = np.linalg.norm(matrix, axis=1)
        self._index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index_of(self, word: str) -> int | None:
        return self._index.get(word)

    def vector(self, word: str) -> np.ndarray | None:
        idx = self._index.get(word)
        return None if idx is None else self.matrix[idx]

    def normalized(self) -> "EmbeddingStore":
        """Copy of the store with L2-normalized rows (zero rows untouched)."""
        norms = np.where(self.norms == 0.0, 1.0, self.norms)
        return EmbeddingStore(list(self.words), self.matrix / norms[:, None])

    # -- nearest-neighbor queries -------------------------------------------

    def nearest_index(self, query: np.ndarray, exclude: set[str] | None = None) -> int:
        if len(self.words) == 0:
            raise EmbeddingError("empty store")
        query = np.ascontiguousarray(query, dtype=np.float64)
        if not np.isfinite(query).all():
            raise EmbeddingError("non-finite query")
        mask = None
        if exclude:
            mask = np.zeros(len(self.words), dtype=np.uint8)
            for w in exclude:
                idx = self._index.get(w)
                if idx is not None:
                    mask[idx] = 1
            if mask.all():
                raise EmbeddingError("empty store after exclusion")
        return int(_kernels.nearest_index(self.matrix, query, mask))

    def nearest_word(self, query: np.ndarray, exclude: set[str] | None = None) -> str:
        """Vocabulary word minimizing Euclidean distance; ties -> lowest index."""
        return self.words[self.nearest_index(query, exclude)]

    def nearest_index_batch(self, queries: np.ndarray) -> np.ndarray:
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        return _kernels.nearest_index_batch(self.matrix, queries)

    def k_nearest_indices(self, query: np.ndarray, k: int) -> np.ndarray:
        """Indices of the k nearest rows ordered by (distance, index)."""
        d2 = _kernels.sq_distances(self.matrix, np.ascontiguousarray(query, dtype=np.float64))
        order = np.argsort(d2, kind="stable")
        return order[:k]


def load_vectors(path: str | Path, expected_dim: int) -> tuple[EmbeddingStore, VectorLoadReport]:
    """Parse a word2vec-text file; rows with wrong arity are rejected and counted."""
    path = Path(path)
    if not path.is_file():
        raise EmbeddingError(f"vector file not found: {path}")
    words: list[str] = []
    rows: list[np.ndarray] = []
    report = VectorLoadReport(path=str(path), rejected_lines=[])
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) == 2 and line_no == 1 and all(p.isdigit() for p in parts):
                continue  # word2vec text files may start with a "count dim" header
            if len(parts) != expected_dim + 1:
                report.n_rejected += 1
                report.rejected_lines.append(line_no)
                continue
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                report.n_rejected += 1
                report.rejected_lines.append(line_no)
                continue
            if not np.isfinite(vec).all():
                raise EmbeddingError(f"non-finite vector values at line {line_no}")
            words.append(parts[0])
            rows.append(vec)
    if not rows:
        raise EmbeddingError(f"no usable vectors in {path}")
    report.n_loaded = len(rows)
    return EmbeddingStore(words, np.vstack(rows)), report


# ---------------------------------------------------------------------------
# Binary cache
# ---------------------------------------------------------------------------

def save_cache(store: EmbeddingStore, path: str | Path) -> None:
    """Write the versioned binary cache (little-endian f32 rows)."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<III", _CACHE_VERSION, len(store.words), store.dim))
        for w in store.words:
            raw = w.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(store.matrix.astype("<f4").tobytes(order="C"))


def load_cache(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CACHE_MAGIC:
            raise EmbeddingError("not an embedding cache file")
        version, count, dim = struct.unpack("<III", fh.read(12))
        if version != _CACHE_VERSION:
            raise EmbeddingError(f"unsupported cache version {version}")
        words = []
        for _ in range(count):
            (length,) = struct.unpack("<H", fh.read(2))
            words.append(fh.read(length).decode("utf-8"))
        data = fh.read(count * dim * 4)
        matrix = np.frombuffer(data, dtype="<f4").reshape(count, dim).astype(np.float64)
    return EmbeddingStore(words, matrix)


# ---------------------------------------------------------------------------
# Covariance model (Mahalanobis support)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceModel:
    sigma: np.ndarray
    sqrt_sigma: np.ndarray
    lam: float


def covariance(store: EmbeddingStore, lam: float) -> CovarianceModel:
    """Regularized vocabulary covariance: sigma = lam*SampleCov + (1-lam)*I.

    SampleCov uses 1/(|V|-1) normalization. The factor is the symmetric PSD
    square root, so sqrt_sigma @ sqrt_sigma.T == sigma up to float error.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    if len(store) < 2:
        raise EmbeddingError("need at least 2 vectors for a covariance model")
    d = store.dim
    if lam == 0.0:
        eye = np.eye(d)
        return CovarianceModel(sigma=eye, sqrt_sigma=eye.copy(), lam=lam)
    sample = np.cov(store.matrix, rowvar=False, ddof=1)
    sample = np.atleast_2d(sample)
    sigma = lam * sample + (1.0 - lam) * np.eye(d)
    sigma = 0.5 * (sigma + sigma.T)
    eigvals, eigvecs = np.linalg.eigh(sigma)
    if eigvals.min() < -1e-9:
        raise EmbeddingError(
            f"covariance not PSD (min eigenvalue {eigvals.min():.3e}); lambda too high for this data"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    sqrt_sigma = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return CovarianceModel(sigma=sigma, sqrt_sigma=sqrt_sigma, lam=lam)
