"""Clients for delegated sentence-embedding and perplexity scoring.

Two interchangeable sources: the HTTP sidecar service, and recorded fixture
files for offline/replay runs. Fixture files are JSON:

    {"model_ids": {"embed": ..., "perplexity": ...},
     "embeddings": {text: [floats]},
     "perplexities": {text: float}}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from privtext.metrics import EmbeddingSet, MetricError


class ScoringError(RuntimeError):
    pass


class SidecarClient:
    """JSON-over-HTTP client for the scorer sidecar."""

    def __init__(
        self,
        base_url: str,
        embed_model: str = "all-MiniLM-L12-v2",
        perplexity_model: str = "gpt2",
        timeout_s: float = 120.0,
        batch_size: int = 32,
    ):
        self.base_url = base_url.rstrip("/")
        self.embed_model = embed_model
        self.perplexity_model = perplexity_model
        self.timeout_s = timeout_s
        self.batch_size = batch_size

    def _post(self, route: str, payload: dict) -> dict:
        url = f"{self.base_url}{route}"
        try:
            resp = requests.post(url, json=payload, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise ScoringError(f"sidecar unreachable at {url}: {exc}") from exc
        if resp.status_code != 200:
            raise ScoringError(f"sidecar {route} returned HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def health(self) -> dict:
        try:
            resp = requests.get(f"{self.base_url}/health", timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise ScoringError(f"sidecar unreachable: {exc}") from exc
        return {"status_code": resp.status_code, **resp.json()}

    def embeddings(self, texts: Sequence[str]) -> np.ndarray:
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            data = self._post("/embed", {"texts": batch, "model_id": self.embed_model})
            rows.extend(data["vectors"])
        return np.array(rows, dtype=np.float64)

    def perplexities(self, texts: Sequence[str]) -> list[float]:
        scores: list[float] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            data = self._post("/perplexity", {"texts": batch, "model_id": self.perplexity_model})
            scores.extend(float(s) for s in data["scores"])
        return scores


class FixtureScorer:
    """Replay recorded sidecar responses keyed by exact text."""

    def __init__(self, fixture: dict):
        self._embeddings = fixture.get("embeddings", {})
        self._perplexities = fixture.get("perplexities", {})
        self.model_ids = fixture.get("model_ids", {})

    @classmethod
    def load(cls, path: str | Path) -> "FixtureScorer":
        path = Path(path)
        if not path.is_file():
            raise ScoringError(f"fixture file not found: {path}")
        return cls(json.loads(path.read_text(encoding="utf-8")))

    def embeddings(self, texts: Sequence[str]) -> np.ndarray:
        rows = []
        for text in texts:
            vec = self._embeddings.get(text)
            if vec is None:
                raise ScoringError(f"no recorded embedding for text: {text[:60]!r}")
            rows.append(vec)
        return np.array(rows, dtype=np.float64)

    def perplexities(self, texts: Sequence[str]) -> list[float]:
        scores = []
        for text in texts:
            score = self._perplexities.get(text)
            if score is None:
                raise ScoringError(f"no recorded perplexity for text: {text[:60]!r}")
            scores.append(float(score))
        return scores


def embedding_set_for_corpus(corpus, scorer) -> EmbeddingSet:
    """Embed every document text through a scorer client."""
    texts = [doc.text for doc in corpus.documents]
    vectors = scorer.embeddings(texts)
    if vectors.shape[0] != len(texts):
        raise MetricError("scorer returned wrong number of embeddings")
    return EmbeddingSet(corpus.ids(), vectors)
