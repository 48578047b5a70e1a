"""Document-level privacy budgets and per-word epsilon accounting.

Bounded mode fixes one document budget per dataset — floor(base_eps times the
dataset's average token count) — and divides it by each document's length.
Unbounded mode applies the base epsilon to every word regardless of length.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from privtext.corpus import Corpus, atomic_write_text

MODE_BOUNDED = "bounded"
MODE_UNBOUNDED = "unbounded"


class BudgetError(ValueError):
    pass


def dataset_avg_words(corpus: Corpus) -> float:
    """Arithmetic mean token count over all documents."""
    if len(corpus) == 0:
        raise BudgetError("empty corpus")
    return sum(d.n_tokens for d in corpus) / len(corpus)


def doc_budget(base_eps: float, avg_words: float) -> int:
    """Document budget: floor(base_eps * avg_words)."""
    if base_eps <= 0 or avg_words <= 0:
        raise BudgetError("base_eps and avg_words must be positive")
    return math.floor(base_eps * avg_words)


@dataclass(frozen=True)
class BudgetPolicy:
    base_eps: float
    mode: str
    avg_words: float
    doc_budget: int = 0

    def __post_init__(self):
        if self.base_eps <= 0:
            raise BudgetError("base_eps must be positive")
        if self.mode not in (MODE_BOUNDED, MODE_UNBOUNDED):
            raise BudgetError(f"unknown budget mode {self.mode!r}")

    @classmethod
    def bounded(cls, base_eps: float, avg_words: float) -> "BudgetPolicy":
        return cls(
            base_eps=base_eps,
            mode=MODE_BOUNDED,
            avg_words=avg_words,
            doc_budget=doc_budget(base_eps, avg_words),
        )

    @classmethod
    def unbounded(cls, base_eps: float, avg_words: float = 1.0) -> "BudgetPolicy":
        return cls(base_eps=base_eps, mode=MODE_UNBOUNDED, avg_words=avg_words)


def per_word_eps(policy: BudgetPolicy, n_tokens: int) -> float:
    """Per-word epsilon for a document of n_tokens tokens."""
    if n_tokens < 1:
        raise BudgetError("n_tokens must be >= 1")
    if policy.mode == MODE_BOUNDED:
        return policy.doc_budget / n_tokens
    return policy.base_eps


@dataclass(frozen=True)
class LedgerRow:
    doc_id: str
    n_tokens: int
    per_word_eps: float | None
    composed_eps: float
    n_perturbed: int
    n_oov_passthrough: int


@dataclass
class BudgetLedger:
    """Per-document accounting for one sanitization run."""

    policy: BudgetPolicy
    rows: list[LedgerRow] = field(default_factory=list)

    def add(
        self,
        doc_id: str,
        n_tokens: int,
        eps_word: float | None,
        n_perturbed: int,
        n_oov: int,
    ) -> LedgerRow:
        composed = 0.0 if eps_word is None or n_tokens == 0 else eps_word * n_tokens
        row = LedgerRow(doc_id, n_tokens, eps_word, composed, n_perturbed, n_oov)
        self.rows.append(row)
        return row

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["doc_id", "n_tokens", "per_word_eps", "composed_eps", "n_perturbed", "n_oov"])
        for r in self.rows:
            eps = "" if r.per_word_eps is None else repr(r.per_word_eps)
            writer.writerow(
                [r.doc_id, r.n_tokens, eps, repr(r.composed_eps), r.n_perturbed, r.n_oov_passthrough]
            )
        return buf.getvalue()

    def save_csv(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_csv())
