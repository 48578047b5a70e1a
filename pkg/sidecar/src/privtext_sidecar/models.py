"""Model registry: built-in deterministic scorers plus optional real models.

The paper-grade models (all-MiniLM-L12-v2 sentence embeddings, GPT-2
perplexity) load only when sentence-transformers / transformers are
installed. The built-in fallbacks are fully deterministic and dependency-free
so the service and its acceptance properties work offline:

- hash-ngram-v1: token + character-trigram counts hashed into 256 dimensions,
  L2-normalized. Deterministic; lexical overlap drives cosine similarity.
- bigram-lm-v1: interpolated word-bigram language model trained on the
  embedded corpus; perplexity is exp of the mean negative log-probability.
"""

from __future__ import annotations

import hashlib
import os
import math
import re
from importlib import resources

import numpy as np

EMBED_DIM = 256
_WORD_RE = re.compile(r"[a-z0-9']+")

FALLBACK_EMBED = "hash-ngram-v1"
FALLBACK_PERPLEXITY = "bigram-lm-v1"
PAPER_EMBED = "all-MiniLM-L12-v2"
PAPER_PERPLEXITY = "gpt2"


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


class HashNgramEmbedder:
    """Deterministic bag-of-features sentence embedder."""

    model_id = FALLBACK_EMBED
    dim = EMBED_DIM

    def _bucket(self, feature: str) -> int:
        digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=4).digest()
        return int.from_bytes(digest, "little") % EMBED_DIM

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), EMBED_DIM))
        for row, text in enumerate(texts):
            features = []
            words = _words(text)
            features.extend(words)
            padded = f"  {text.lower()}  "
            features.extend(padded[i : i + 3] for i in range(len(padded) - 2))
            for feature in features:
                out[row, self._bucket(feature)] += 1.0
            norm = np.linalg.norm(out[row])
            if norm == 0.0:
                out[row, self._bucket("<empty>")] = 1.0
                norm = 1.0
            out[row] /= norm
        return out


class BigramLM:
    """Interpolated word-bigram LM with unigram backoff and OOV smoothing."""

    model_id = FALLBACK_PERPLEXITY

    def __init__(self, corpus_text: str, alpha: float = 0.4):
        self.alpha = alpha
        self.unigrams: dict[str, int] = {}
        self.bigrams: dict[tuple[str, str], int] = {}
        self.total = 0
        for line in corpus_text.splitlines():
            tokens = ["<s>"] + _words(line)
            for tok in tokens[1:]:
                self.unigrams[tok] = self.unigrams.get(tok, 0) + 1
                self.total += 1
            for prev, cur in zip(tokens, tokens[1:]):
                self.bigrams[(prev, cur)] = self.bigrams.get((prev, cur), 0) + 1
        self.vocab_size = len(self.unigrams)
        self.context_totals: dict[str, int] = {}
        for (prev, _), count in self.bigrams.items():
            self.context_totals[prev] = self.context_totals.get(prev, 0) + count

    def _p_unigram(self, word: str) -> float:
        return (self.unigrams.get(word, 0) + 1.0) / (self.total + self.vocab_size + 1.0)

    def _p_bigram(self, prev: str, word: str) -> float:
        base = self._p_unigram(word)
        count = self.bigrams.get((prev, word), 0)
        context = self.context_totals.get(prev, 0)
        return (count + self.alpha * base) / (context + self.alpha)

    def perplexity(self, text: str) -> float:
        tokens = ["<s>"] + _words(text)
        if len(tokens) == 1:
            return float(self.total + self.vocab_size + 1.0)  # empty text: max surprise
        log_sum = 0.0
        for prev, cur in zip(tokens, tokens[1:]):
            log_sum += math.log(self._p_bigram(prev, cur))
        return float(math.exp(-log_sum / (len(tokens) - 1)))

    def score(self, texts: list[str]) -> list[float]:
        return [self.perplexity(t) for t in texts]


def _load_corpus_text() -> str:
    return resources.files("privtext_sidecar").joinpath("lm_corpus.txt").read_text("utf-8")


def _allow_download() -> bool:
    return os.environ.get("PRIVTEXT_SIDECAR_DOWNLOAD", "") == "1"


class _SentenceTransformerEmbedder:  # pragma: no cover - depends on optional deps
    model_id = PAPER_EMBED

    def __init__(self):
        from sentence_transformers import SentenceTransformer

        # local cache by default; set PRIVTEXT_SIDECAR_DOWNLOAD=1 to fetch
        self._model = SentenceTransformer(
            f"sentence-transformers/{PAPER_EMBED}",
            local_files_only=not _allow_download(),
        )
        self.dim = self._model.get_sentence_embedding_dimension()

    def embed(self, texts: list[str]) -> np.ndarray:
        return np.asarray(self._model.encode(texts, convert_to_numpy=True), dtype=np.float64)


class _Gpt2Scorer:  # pragma: no cover - depends on optional deps
    model_id = PAPER_PERPLEXITY

    def __init__(self):
        import torch
        from transformers import GPT2LMHeadModel, GPT2TokenizerFast

        local_only = not _allow_download()
        self._torch = torch
        self._tokenizer = GPT2TokenizerFast.from_pretrained("gpt2", local_files_only=local_only)
        self._model = GPT2LMHeadModel.from_pretrained("gpt2", local_files_only=local_only).eval()

    def score(self, texts: list[str]) -> list[float]:
        scores = []
        for text in texts:
            ids = self._tokenizer(" ".join(text.split()), return_tensors="pt").input_ids
            with self._torch.no_grad():
                loss = self._model(ids, labels=ids).loss
            scores.append(float(self._torch.exp(loss)))
        return scores


class ModelRegistry:
    """model_id -> scorer; paper ids alias to fallbacks unless strict."""

    def __init__(self, strict: bool = False):
        self.strict = strict
        self.embedders = {FALLBACK_EMBED: HashNgramEmbedder()}
        self.scorers = {FALLBACK_PERPLEXITY: BigramLM(_load_corpus_text())}
        self.load_errors: dict[str, str] = {}
        try:
            self.embedders[PAPER_EMBED] = _SentenceTransformerEmbedder()
        except Exception as exc:  # noqa: BLE001 - any import/download failure
            self.load_errors[PAPER_EMBED] = str(exc)
        try:
            self.scorers[PAPER_PERPLEXITY] = _Gpt2Scorer()
        except Exception as exc:  # noqa: BLE001
            self.load_errors[PAPER_PERPLEXITY] = str(exc)

    def loaded_ids(self) -> list[str]:
        return sorted(self.embedders) + sorted(self.scorers)

    def embedder(self, model_id: str):
        model = self.embedders.get(model_id)
        if model is None and not self.strict:
            model = self.embedders[FALLBACK_EMBED]
        return model

    def scorer(self, model_id: str):
        model = self.scorers.get(model_id)
        if model is None and not self.strict:
            model = self.scorers[FALLBACK_PERPLEXITY]
        return model
