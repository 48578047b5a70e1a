"""Apply a mechanism to documents and corpora under a budget policy.

Sanitization maps tokens one-to-one, so output documents always have exactly
as many tokens as their inputs. Per-token RNG streams make the result
independent of worker count and scheduling.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from privtext.budget import MODE_BOUNDED, BudgetLedger, BudgetPolicy, per_word_eps
from privtext.corpus import Corpus, Document, Token, atomic_write_text, detokenize, token_kind
from privtext.rng import TokenStreams


class DocumentStats(NamedTuple):
    n_perturbed: int
    n_oov: int


def sanitize_document(
    doc: Document, mech, eps_word: float, streams: TokenStreams
) -> tuple[Document, DocumentStats]:
    """Sanitize every token of one document with its own RNG stream.

    id/author/label are copied; the text is regenerated by detokenization.
    """
    rngs = [streams.for_token(doc.id, i) for i in range(doc.n_tokens)]
    batch = getattr(mech, "sanitize_batch", None)
    if batch is not None:
        results = batch([t.surface for t in doc.tokens], eps_word, rngs)
    else:
        results = [mech.sanitize(t.surface, eps_word, rng) for t, rng in zip(doc.tokens, rngs)]

    out_tokens: list[Token] = []
    n_perturbed = 0
    n_oov = 0
    for tok, result in zip(doc.tokens, results):
        if result.oov:
            n_oov += 1
            out_tokens.append(tok)
            continue
        if result.word != tok.surface:
            n_perturbed += 1
        out_tokens.append(Token(result.word, token_kind(result.word)))
    out_tokens = tuple(out_tokens)
    sanitized = Document(
        id=doc.id,
        author_id=doc.author_id,
        text=detokenize(out_tokens),
        label=doc.label,
        tokens=out_tokens,
        extras=doc.extras,
    )
    return sanitized, DocumentStats(n_perturbed, n_oov)


@dataclass
class SanitizationRun:
    mechanism: object
    policy: BudgetPolicy
    seed: int
    input: Corpus
    workers: int = 1
    log_path: str | Path | None = None


def sanitize_corpus(run: SanitizationRun) -> tuple[Corpus, BudgetLedger]:
    """Sanitize a whole corpus; one ledger row per document, input order kept."""
    streams = TokenStreams(run.seed)
    policy = run.policy
    mech = run.mechanism

    def one(doc: Document) -> tuple[Document, DocumentStats, float | None]:
        if doc.n_tokens == 0:
            return doc, DocumentStats(0, 0), None
        eps_word = per_word_eps(policy, doc.n_tokens)
        sanitized, stats = sanitize_document(doc, mech, eps_word, streams)
        return sanitized, stats, eps_word

    if run.workers > 1:
        with ThreadPoolExecutor(max_workers=run.workers) as pool:
            results = list(pool.map(one, run.input.documents))
    else:
        results = [one(doc) for doc in run.input.documents]

    ledger = BudgetLedger(policy=policy)
    out_docs: list[Document] = []
    log_lines: list[str] = []
    for doc, (sanitized, stats, eps_word) in zip(run.input.documents, results):
        row = ledger.add(doc.id, doc.n_tokens, eps_word, stats.n_perturbed, stats.n_oov)
        extras = sanitized.extras_dict()
        extras.update(
            {
                "sanitized": True,
                "mechanism": mech.name,
                "eps_word": eps_word,
                "composed_eps": row.composed_eps,
            }
        )
        out_docs.append(
            Document(
                id=sanitized.id,
                author_id=sanitized.author_id,
                text=sanitized.text,
                label=sanitized.label,
                tokens=sanitized.tokens,
                extras=tuple(extras.items()),
            )
        )
        log_lines.append(
            json.dumps(
                {
                    "doc_id": doc.id,
                    "status": "ok",
                    "n_tokens": doc.n_tokens,
                    "eps_word": eps_word,
                    "n_perturbed": stats.n_perturbed,
                    "n_oov": stats.n_oov,
                }
            )
        )

    if run.log_path is not None:
        atomic_write_text(run.log_path, "".join(line + "\n" for line in log_lines))

    output = Corpus(
        name=f"{run.input.name}-sanitized",
        documents=tuple(out_docs),
        stage="sanitized",
    )
    return output, ledger


def assert_budget_closure(ledger: BudgetLedger) -> None:
    """Bounded-mode check: every non-empty document composes to the doc budget."""
    if ledger.policy.mode != MODE_BOUNDED:
        return
    budget = ledger.policy.doc_budget
    for row in ledger.rows:
        if row.n_tokens == 0:
            continue
        if abs(row.composed_eps - budget) > 1e-9 * max(1.0, abs(budget)):
            raise AssertionError(
                f"budget closure violated for {row.doc_id}: {row.composed_eps} != {budget}"
            )
