"""The four word-level metric-LDP mechanisms behind one word-in/word-out API.

All mechanisms share the contract: the output is a vocabulary word or the
unchanged input (out-of-vocabulary tokens pass through and are flagged), and
the result is deterministic under a fixed RNG stream. Batch sampling helpers
(`sample_outputs`) exist for the Monte-Carlo verification suites and draw from
a single stream; the scalar `sanitize` path is what the pipeline replays
token by token.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from privtext.embeddings import CovarianceModel, EmbeddingStore

CMP = "cmp"
MAHALANOBIS = "mahalanobis"
DIFFRACTOR = "diffractor"
SANTEXT = "santext"
SANTEXT_PLUS = "santext_plus"

GATE_SANITIZE = "sanitize"
GATE_KEEP = "keep"


class MechanismError(ValueError):
    pass


class SanitizeResult(NamedTuple):
    word: str
    oov: bool


# ---------------------------------------------------------------------------
# Noise primitives
# ---------------------------------------------------------------------------

def cmp_noise(dim: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Noise with density proportional to exp(-eps * |z|).

    Magnitude r ~ Gamma(shape=dim, scale=1/eps); direction uniform on the unit
    sphere via a normalized Gaussian draw.
    """
    if eps <= 0:
        raise MechanismError("eps must be positive")
    u = rng.standard_normal(dim)
    norm = np.linalg.norm(u)
    while norm == 0.0:
        u = rng.standard_normal(dim)
        norm = np.linalg.norm(u)
    r = rng.gamma(shape=dim, scale=1.0 / eps)
    return (r / norm) * u


def cmp_noise_batch(dim: int, eps: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """n independent draws of cmp_noise, vectorized for the MC suites."""
    if eps <= 0:
        raise MechanismError("eps must be positive")
    u = rng.standard_normal((n, dim))
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    r = rng.gamma(shape=dim, scale=1.0 / eps, size=n)
    return u / norms * r[:, None]


def two_sided_geometric(eps: float, rng: np.random.Generator) -> int:
    """Sample k with Pr[k] proportional to exp(-eps * |k|).

    Exact sampler: the difference of two iid geometric draws with success
    probability 1 - exp(-eps) has this pmf.
    """
    if eps <= 0:
        raise MechanismError("eps must be positive")
    p = -np.expm1(-eps)
    g1, g2 = rng.geometric(p, size=2)
    return int(g1 - g2)


def two_sided_geometric_batch(eps: float, rng: np.random.Generator, n: int) -> np.ndarray:
    if eps <= 0:
        raise MechanismError("eps must be positive")
    p = -np.expm1(-eps)
    draws = rng.geometric(p, size=(n, 2))
    return draws[:, 0] - draws[:, 1]


def two_sided_geometric_pmf(eps: float, k: np.ndarray | int) -> np.ndarray:
    """Closed-form pmf: (1-q)/(1+q) * q^|k| with q = exp(-eps)."""
    q = np.exp(-eps)
    return (1.0 - q) / (1.0 + q) * q ** np.abs(k)


# ---------------------------------------------------------------------------
# Mechanism configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MechanismConfig:
    """Knob bundle for all mechanism families; only relevant fields are read."""

    normalize: bool = False          # cmp: L2-normalize vectors before perturbation
    cov_lambda: float = 0.2          # mahalanobis: covariance regularization weight
    num_lists: int = 16              # diffractor
    lists_seed: int = 0              # diffractor: projection seed
    candidate_k: int = 20            # santext
    plus: bool = False               # santext+: frequency gate on
    sensitive_percentile: float = 0.9
    p_nonsensitive: float = 0.3
    freq_file: str | None = None

    def __post_init__(self):
        if self.candidate_k < 1:
            raise MechanismError("candidate_k must be >= 1")
        if not 0.0 <= self.sensitive_percentile <= 1.0:
            raise MechanismError("sensitive_percentile must be in [0, 1]")
        if not 0.0 <= self.p_nonsensitive <= 1.0:
            raise MechanismError("p_nonsensitive must be in [0, 1]")
        if self.num_lists < 1:
            raise MechanismError("num_lists must be >= 1")


# ---------------------------------------------------------------------------
# CMP
# ---------------------------------------------------------------------------

class CmpMechanism:
    """Multivariate perturbation: add exp(-eps|z|) noise, take the nearest word."""

    name = CMP

    def __init__(self, store: EmbeddingStore, normalize: bool = False):
        self.store = store.normalized() if normalize else store

    def sanitize(self, word: str, eps: float, rng: np.random.Generator) -> SanitizeResult:
        vec = self.store.vector(word)
        if vec is None:
            return SanitizeResult(word, True)
        noisy = vec + cmp_noise(self.store.dim, eps, rng)
        return SanitizeResult(self.store.nearest_word(noisy), False)

    def sample_outputs(self, word: str, eps: float, rng: np.random.Generator, n: int) -> np.ndarray:
        """n output vocabulary indices for one input word (MC helper)."""
        vec = self.store.vector(word)
        if vec is None:
            raise MechanismError(f"{word!r} is out of vocabulary")
        noisy = vec[None, :] + cmp_noise_batch(self.store.dim, eps, rng, n)
        return self.store.nearest_index_batch(noisy)

    def sanitize_batch(self, surfaces, eps, rngs) -> list[SanitizeResult]:
        """Per-token noise from each token's own stream, NN search batched."""
        return _noisy_batch(self.store, surfaces, eps, rngs, lambda rng: cmp_noise(self.store.dim, eps, rng))


def _noisy_batch(store, surfaces, eps, rngs, noise_fn) -> list[SanitizeResult]:
    results: list[SanitizeResult | None] = [None] * len(surfaces)
    queries, positions = [], []
    for i, (surface, rng) in enumerate(zip(surfaces, rngs)):
        vec = store.vector(surface)
        if vec is None:
            results[i] = SanitizeResult(surface, True)
        else:
            queries.append(vec + noise_fn(rng))
            positions.append(i)
    if queries:
        indices = store.nearest_index_batch(np.array(queries))
        for pos, idx in zip(positions, indices):
            results[pos] = SanitizeResult(store.words[idx], False)
    return results


def cmp_sanitize(
    word: str, eps: float, store: EmbeddingStore, rng: np.random.Generator
) -> SanitizeResult:
    return CmpMechanism(store).sanitize(word, eps, rng)


# ---------------------------------------------------------------------------
# Mahalanobis
# ---------------------------------------------------------------------------

class MahalanobisMechanism:
    """CMP with noise shaped by the regularized vocabulary covariance."""

    name = MAHALANOBIS

    def __init__(self, store: EmbeddingStore, cov: CovarianceModel):
        self.store = store
        self.cov = cov

    def _noise(self, eps: float, rng: np.random.Generator) -> np.ndarray:
        return self.cov.sqrt_sigma @ cmp_noise(self.store.dim, eps, rng)

    def sanitize(self, word: str, eps: float, rng: np.random.Generator) -> SanitizeResult:
        vec = self.store.vector(word)
        if vec is None:
            return SanitizeResult(word, True)
        return SanitizeResult(self.store.nearest_word(vec + self._noise(eps, rng)), False)

    def sample_outputs(self, word: str, eps: float, rng: np.random.Generator, n: int) -> np.ndarray:
        vec = self.store.vector(word)
        if vec is None:
            raise MechanismError(f"{word!r} is out of vocabulary")
        base = cmp_noise_batch(self.store.dim, eps, rng, n)
        noisy = vec[None, :] + base @ self.cov.sqrt_sigma.T
        return self.store.nearest_index_batch(noisy)

    def sanitize_batch(self, surfaces, eps, rngs) -> list[SanitizeResult]:
        return _noisy_batch(self.store, surfaces, eps, rngs, lambda rng: self._noise(eps, rng))


def maha_sanitize(
    word: str,
    eps: float,
    store: EmbeddingStore,
    cov: CovarianceModel,
    rng: np.random.Generator,
) -> SanitizeResult:
    return MahalanobisMechanism(store, cov).sanitize(word, eps, rng)


# ---------------------------------------------------------------------------
# 1-Diffractor (geometric variant)
# ---------------------------------------------------------------------------

class DiffractorLists:
    """Vocabulary permutations ordered by per-list 1-D Gaussian projections."""

    def __init__(self, orders: list[np.ndarray], words: tuple[str, ...]):
        self.words = words
        self.orders = orders                      # list index -> vocab indices, sorted
        self.positions: list[dict[str, int]] = [
            {words[v]: pos for pos, v in enumerate(order)} for order in orders
        ]

    @property
    def num_lists(self) -> int:
        return len(self.orders)

    def word_at(self, list_id: int, position: int) -> str:
        return self.words[self.orders[list_id][position]]

    def position_of(self, list_id: int, word: str) -> int | None:
        return self.positions[list_id].get(word)


def diffractor_build(store: EmbeddingStore, num_lists: int, seed: int = 0) -> DiffractorLists:
    """Project the vocabulary onto num_lists random 1-D axes and sort each."""
    if num_lists < 1:
        raise MechanismError("num_lists must be >= 1")
    if len(store) == 0:
        raise MechanismError("empty store")
    orders = []
    for list_id in range(num_lists):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(list_id,)))
        )
        direction = rng.standard_normal(store.dim)
        values = store.matrix @ direction
        orders.append(np.argsort(values, kind="stable"))
    return DiffractorLists(orders, store.words)


class DiffractorMechanism:
    """Two-sided geometric hops along a uniformly chosen projection list."""

    name = DIFFRACTOR

    def __init__(self, lists: DiffractorLists):
        self.lists = lists

    def sanitize(self, word: str, eps: float, rng: np.random.Generator) -> SanitizeResult:
        if word not in self.lists.positions[0]:
            return SanitizeResult(word, True)
        list_id = int(rng.integers(self.lists.num_lists))
        pos = self.lists.position_of(list_id, word)
        k = two_sided_geometric(eps, rng)
        n = len(self.lists.words)
        target = min(max(pos + k, 0), n - 1)
        return SanitizeResult(self.lists.word_at(list_id, target), False)

    def sample_outputs(self, word: str, eps: float, rng: np.random.Generator, n: int) -> np.ndarray:
        if word not in self.lists.positions[0]:
            raise MechanismError(f"{word!r} is out of vocabulary")
        list_ids = rng.integers(self.lists.num_lists, size=n)
        ks = two_sided_geometric_batch(eps, rng, n)
        size = len(self.lists.words)
        out = np.empty(n, dtype=np.int64)
        for lid in range(self.lists.num_lists):
            sel = list_ids == lid
            if not sel.any():
                continue
            pos = self.lists.position_of(lid, word)
            targets = np.clip(pos + ks[sel], 0, size - 1)
            out[sel] = self.lists.orders[lid][targets]
        return out


def diffractor_sanitize(
    word: str, eps: float, lists: DiffractorLists, rng: np.random.Generator
) -> SanitizeResult:
    return DiffractorMechanism(lists).sanitize(word, eps, rng)


# ---------------------------------------------------------------------------
# SanText / SanText+
# ---------------------------------------------------------------------------

class FrequencyTable:
    """Reference word frequencies for the SanText+ sensitivity gate."""

    def __init__(self, counts: dict[str, float], sensitive_percentile: float):
        if not counts:
            raise MechanismError("empty frequency table")
        self.counts = dict(counts)
        values = np.array(sorted(self.counts.values()), dtype=np.float64)
        self.cutoff = float(np.quantile(values, sensitive_percentile))

    @classmethod
    def load(cls, path: str | Path, sensitive_percentile: float) -> "FrequencyTable":
        path = Path(path)
        if not path.is_file():
            raise MechanismError(f"frequency file not found: {path}")
        counts: dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) != 2:
                    continue
                try:
                    counts[parts[0]] = float(parts[1])
                except ValueError:
                    continue
        return cls(counts, sensitive_percentile)

    def is_sensitive(self, word: str) -> bool:
        freq = self.counts.get(word)
        if freq is None:
            return True  # unseen words are sensitive
        return freq < self.cutoff


def santext_plus_gate(
    word: str,
    freq_table: FrequencyTable,
    cfg: MechanismConfig,
    rng: np.random.Generator,
) -> str:
    """Decide whether a word is sanitized or kept verbatim."""
    if freq_table.is_sensitive(word):
        return GATE_SANITIZE
    if rng.random() < cfg.p_nonsensitive:
        return GATE_SANITIZE
    return GATE_KEEP


class SanTextMechanism:
    """Exponential-mechanism sampling within each word's candidate set.

    Candidates are the word itself plus its candidate_k - 1 nearest
    vocabulary neighbors; selection probability is proportional to
    exp(-eps * d / (2 * d_max)) with d_max the candidate set's largest
    distance (sensitivity folded into the utility scale).
    """

    name = SANTEXT

    def __init__(
        self,
        store: EmbeddingStore,
        cfg: MechanismConfig,
        freq_table: FrequencyTable | None = None,
    ):
        self.store = store
        self.cfg = cfg
        if cfg.plus:
            if freq_table is None:
                if cfg.freq_file is None:
                    raise MechanismError("santext_plus requires a frequency file")
                freq_table = FrequencyTable.load(cfg.freq_file, cfg.sensitive_percentile)
            self.name = SANTEXT_PLUS
        self.freq_table = freq_table
        self._candidates: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def candidate_set(self, word: str) -> tuple[np.ndarray, np.ndarray]:
        """(vocab indices, distances) for the word's candidate set."""
        cached = self._candidates.get(word)
        if cached is not None:
            return cached
        idx = self.store.index_of(word)
        if idx is None:
            raise MechanismError(f"{word!r} is out of vocabulary")
        k = min(self.cfg.candidate_k, len(self.store))
        vec = self.store.matrix[idx]
        near = self.store.k_nearest_indices(vec, k + 1)
        others = [int(i) for i in near if int(i) != idx][: k - 1]
        indices = np.array([idx] + others, dtype=np.int64)
        dists = np.linalg.norm(self.store.matrix[indices] - vec[None, :], axis=1)
        entry = (indices, dists)
        self._candidates[word] = entry
        return entry

    def candidate_probs(self, word: str, eps: float) -> tuple[np.ndarray, np.ndarray]:
        """(vocab indices, selection probabilities) at a given eps."""
        indices, dists = self.candidate_set(word)
        d_max = dists.max()
        if d_max == 0.0:
            probs = np.full(len(indices), 1.0 / len(indices))
        else:
            scores = -eps * dists / (2.0 * d_max)
            scores -= scores.max()
            weights = np.exp(scores)
            probs = weights / weights.sum()
        return indices, probs

    def sanitize(self, word: str, eps: float, rng: np.random.Generator) -> SanitizeResult:
        if eps < 0:
            raise MechanismError("eps must be nonnegative")
        if word not in self.store:
            return SanitizeResult(word, True)
        if self.freq_table is not None:
            if santext_plus_gate(word, self.freq_table, self.cfg, rng) == GATE_KEEP:
                return SanitizeResult(word, False)
        indices, probs = self.candidate_probs(word, eps)
        choice = rng.choice(len(indices), p=probs)
        return SanitizeResult(self.store.words[indices[choice]], False)

    def sample_outputs(self, word: str, eps: float, rng: np.random.Generator, n: int) -> np.ndarray:
        indices, probs = self.candidate_probs(word, eps)
        picks = rng.choice(len(indices), size=n, p=probs)
        return indices[picks]


def santext_sanitize(
    word: str,
    eps: float,
    store: EmbeddingStore,
    cfg: MechanismConfig,
    rng: np.random.Generator,
) -> SanitizeResult:
    return SanTextMechanism(store, cfg).sanitize(word, eps, rng)


# ---------------------------------------------------------------------------
# Construction by name
# ---------------------------------------------------------------------------

def build_mechanism(
    name: str,
    store: EmbeddingStore,
    cfg: MechanismConfig | None = None,
    cov: CovarianceModel | None = None,
):
    """Instantiate a mechanism from its identity string."""
    from privtext.embeddings import covariance

    cfg = cfg or MechanismConfig()
    if name == CMP:
        return CmpMechanism(store, normalize=cfg.normalize)
    if name == MAHALANOBIS:
        if cov is None:
            cov = covariance(store, cfg.cov_lambda)
        return MahalanobisMechanism(store, cov)
    if name == DIFFRACTOR:
        return DiffractorMechanism(diffractor_build(store, cfg.num_lists, cfg.lists_seed))
    if name in (SANTEXT, SANTEXT_PLUS):
        if name == SANTEXT_PLUS and not cfg.plus:
            cfg = dataclasses.replace(cfg, plus=True)
        return SanTextMechanism(store, cfg)
    raise MechanismError(f"unknown mechanism {name!r}")
