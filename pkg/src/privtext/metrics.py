"""Privacy and utility metrics: SS, In, Co, token shift, and the trade-off.

Sentence embeddings and perplexities are never computed here; they come from
the scorer sidecar, recorded fixtures, or precomputed CSV files. Everything
in this module is a pure function of its inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from privtext.corpus import Corpus


class MetricError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Embedding sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingSet:
    doc_ids: tuple[str, ...]
    vectors: np.ndarray  # n x m, row order matches id order

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.doc_ids):
            raise MetricError("vectors must be n x m with one row per id")
        if len(self.doc_ids) < 1:
            raise MetricError("embedding set must be non-empty")


def load_embedding_csv(path: str | Path) -> EmbeddingSet:
    """CSV rows ``doc_id,v1,...,vm`` (no header)."""
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            ids.append(record[0])
            rows.append([float(x) for x in record[1:]])
    if not rows:
        raise MetricError(f"empty embedding file: {path}")
    return EmbeddingSet(tuple(ids), np.array(rows, dtype=np.float64))


def save_embedding_csv(es: EmbeddingSet, path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for doc_id, row in zip(es.doc_ids, es.vectors):
        writer.writerow([doc_id] + [repr(float(x)) for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _check_aligned(orig: EmbeddingSet, priv: EmbeddingSet) -> None:
    if orig.doc_ids != priv.doc_ids:
        raise MetricError("embedding sets must have matching ids in matching order")


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if (na == 0).any() or (nb == 0).any():
        raise MetricError("zero vector in embedding set")
    return np.einsum("ij,ij->i", a, b) / (na * nb)


def semantic_similarity(orig: EmbeddingSet, priv: EmbeddingSet) -> float:
    """Mean per-document cosine similarity between the two sets."""
    _check_aligned(orig, priv)
    return float(_cosine_rows(orig.vectors, priv.vectors).mean())


def indistinguishability(orig: EmbeddingSet, priv: EmbeddingSet) -> float:
    """Mean normalized rank of each private text among all private texts.

    For each original i, private vectors are ordered by descending cosine to
    it (ties by position in id order); k_i is the 1-based position of the true
    counterpart, and the score is mean((k_i - 1) / (n - 1)). 0 means the
    counterpart is always nearest, 1 always farthest.
    """
    _check_aligned(orig, priv)
    n = len(orig.doc_ids)
    if n < 2:
        raise MetricError("need at least 2 documents for ranks")
    po = orig.vectors / np.linalg.norm(orig.vectors, axis=1, keepdims=True)
    pv = priv.vectors / np.linalg.norm(priv.vectors, axis=1, keepdims=True)
    if not (np.isfinite(po).all() and np.isfinite(pv).all()):
        raise MetricError("zero vector in embedding set")
    sims = po @ pv.T  # sims[i, j] = cosine(orig_i, priv_j)
    own = np.diag(sims)
    better = (sims > own[:, None]).sum(axis=1)
    tied_before = ((sims == own[:, None]) & (np.arange(n)[None, :] < np.arange(n)[:, None])).sum(axis=1)
    ranks = 1 + better + tied_before
    return float(((ranks - 1) / (n - 1)).mean())


# ---------------------------------------------------------------------------
# Token count shift
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftSummary:
    mean: float
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float
    outliers: tuple[tuple[str, int], ...]

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "p5": self.p5,
            "p25": self.p25,
            "p50": self.p50,
            "p75": self.p75,
            "p95": self.p95,
            "outliers": [{"doc_id": d, "shift": s} for d, s in self.outliers],
        }


def token_shift(priv: Corpus, recon: Corpus) -> ShiftSummary:
    """Distribution of tokens(recon) - tokens(priv) per document.

    Quantiles cover all documents; the mean excludes shifts beyond 1.5*IQR,
    which are reported separately.
    """
    if priv.ids() != recon.ids():
        raise MetricError("corpora must have matching ids in matching order")
    shifts = np.array(
        [r.n_tokens - p.n_tokens for p, r in zip(priv.documents, recon.documents)],
        dtype=np.float64,
    )
    q1, q3 = np.quantile(shifts, [0.25, 0.75])
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inlier = (shifts >= lo) & (shifts <= hi)
    outliers = tuple(
        (doc.id, int(s)) for doc, s, ok in zip(priv.documents, shifts, inlier) if not ok
    )
    mean = float(shifts[inlier].mean()) if inlier.any() else 0.0
    p5, p25, p50, p75, p95 = (float(x) for x in np.quantile(shifts, [0.05, 0.25, 0.5, 0.75, 0.95]))
    return ShiftSummary(mean, p5, p25, p50, p75, p95, outliers)


# ---------------------------------------------------------------------------
# Perplexity (delegated scoring)
# ---------------------------------------------------------------------------

class ScorerClient(Protocol):
    def perplexities(self, texts: Sequence[str]) -> list[float]: ...
    def embeddings(self, texts: Sequence[str]) -> np.ndarray: ...


def mean_perplexity(texts: Sequence[str], scorer: ScorerClient) -> float:
    """Arithmetic mean of the scorer's per-text perplexities."""
    if not texts:
        raise MetricError("no texts to score")
    scores = scorer.perplexities(list(texts))
    if len(scores) != len(texts):
        raise MetricError("scorer returned wrong number of scores")
    if not all(math.isfinite(s) and s > 0 for s in scores):
        raise MetricError("scorer returned a non-finite or non-positive perplexity")
    return float(sum(scores) / len(scores))


# ---------------------------------------------------------------------------
# Privacy-utility trade-off
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TradeoffInputs:
    u_priv: float
    u_orig: float
    p_priv: float
    p_orig: float
    u_majority_guess: float = 0.0

    def __post_init__(self):
        for name, value in (
            ("u_priv", self.u_priv),
            ("u_orig", self.u_orig),
            ("p_priv", self.p_priv),
            ("p_orig", self.p_orig),
            ("u_majority_guess", self.u_majority_guess),
        ):
            if not 0.0 <= value <= 100.0:
                raise MetricError(f"{name} must be in [0, 100], got {value}")


def tradeoff(inp: TradeoffInputs) -> float:
    """Utility retention minus adversary retention.

    ((U_p - U_mg) / (U_o - U_mg)) - (P_p / P_o); positive means the privacy
    gains outweigh the utility losses.
    """
    if inp.p_orig <= 0:
        raise MetricError("p_orig must be positive")
    if inp.u_orig - inp.u_majority_guess <= 0:
        raise MetricError("u_orig must exceed the majority-guess baseline")
    util_term = (inp.u_priv - inp.u_majority_guess) / (inp.u_orig - inp.u_majority_guess)
    return util_term - inp.p_priv / inp.p_orig


# ---------------------------------------------------------------------------
# Report rows (Util/SS/Co/P(s)/P(a)/In/TO(s)/TO(a))
# ---------------------------------------------------------------------------

_REPORT_FIELDS = (
    "dataset",
    "mechanism",
    "eps",
    "stage",
    "util",
    "util_std",
    "ss",
    "co",
    "p_static",
    "p_adaptive",
    "indistinguishability",
    "to_static",
    "to_adaptive",
)


@dataclass
class EvalReport:
    rows: list[dict] = field(default_factory=list)

    def add_row(self, **kwargs) -> dict:
        unknown = set(kwargs) - set(_REPORT_FIELDS)
        if unknown:
            raise MetricError(f"unknown report fields: {sorted(unknown)}")
        row = {k: kwargs.get(k) for k in _REPORT_FIELDS}
        self.rows.append(row)
        return row

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_REPORT_FIELDS)
        for row in self.rows:
            writer.writerow(["" if row[k] is None else row[k] for k in _REPORT_FIELDS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows}, indent=2, sort_keys=True) + "\n"


def projection_rows(es: EmbeddingSet, authors: Sequence[str]) -> list[tuple[str, str, float, float]]:
    """2-D PCA coordinates per document for external plotting."""
    if len(authors) != len(es.doc_ids):
        raise MetricError("authors must align with doc ids")
    x = es.vectors - es.vectors.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    coords = x @ vt[:2].T
    if coords.shape[1] < 2:
        coords = np.hstack([coords, np.zeros((coords.shape[0], 2 - coords.shape[1]))])
    return [
        (doc_id, author, float(cx), float(cy))
        for doc_id, author, (cx, cy) in zip(es.doc_ids, authors, coords)
    ]


def projection_csv(es: EmbeddingSet, authors: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["doc_id", "author", "x", "y"])
    for row in projection_rows(es, authors):
        writer.writerow(row)
    return buf.getvalue()
