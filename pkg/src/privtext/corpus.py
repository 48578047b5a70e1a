"""Corpus ingestion, tokenization, splitting, and serialization.

The corpus format is JSONL: one object per line with ``id``, ``author``,
``text`` and an optional ``label``. Unknown keys survive a load/save
round-trip through ``Document.extras``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

KIND_WORD = "word"
KIND_PUNCT = "punctuation"
KIND_NUMERIC = "numeric"
KIND_OTHER = "other"

JSONL_SCHEMA = "jsonl-v1"


class CorpusError(ValueError):
    """Fatal corpus-level problem (missing file, duplicate ids, empty corpus)."""


@dataclass(frozen=True)
class Token:
    surface: str
    kind: str

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")


@dataclass(frozen=True)
class Document:
    id: str
    author_id: str
    text: str
    label: str | None = None
    tokens: tuple[Token, ...] = ()
    extras: tuple[tuple[str, object], ...] = ()

    @classmethod
    def from_text(cls, id, author_id, text, label=None, extras=()) -> "Document":
        return cls(
            id=id,
            author_id=author_id,
            text=text,
            label=label,
            tokens=tuple(tokenize(text)),
            extras=tuple(extras),
        )

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    def extras_dict(self) -> dict:
        return dict(self.extras)


@dataclass(frozen=True)
class Corpus:
    name: str
    documents: tuple[Document, ...]
    stage: str = "clean"

    def __post_init__(self):
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise CorpusError(f"duplicate document ids: {dupes}")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.documents)

    def authors(self) -> tuple[str, ...]:
        return tuple(sorted({d.author_id for d in self.documents}))

    def with_stage(self, stage: str) -> "Corpus":
        return replace(self, stage=stage)


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

def _is_word_char(c: str) -> bool:
    return c.isalnum()


def _split_chunk(chunk: str) -> list[str]:
    tokens: list[str] = []
    buf: list[str] = []
    i, n = 0, len(chunk)
    while i < n:
        c = chunk[i]
        if _is_word_char(c):
            buf.append(c)
        elif c == "'" and i + 1 < n and _is_word_char(chunk[i + 1]):
            # contraction split: "we'd" -> "we", "'d"; leading "'d" stays whole
            if buf:
                tokens.append("".join(buf))
            buf = [c]
        elif (
            c in ".,"
            and buf
            and buf[-1].isdigit()
            and i + 1 < n
            and chunk[i + 1].isdigit()
        ):
            buf.append(c)  # decimal point / thousands separator inside a number
        else:
            if buf:
                tokens.append("".join(buf))
                buf = []
            tokens.append(c)
        i += 1
    if buf:
        tokens.append("".join(buf))
    return tokens


def token_kind(surface: str) -> str:
    """Deterministic kind classification for a token surface."""
    if not any(_is_word_char(c) for c in surface):
        return KIND_PUNCT
    body = surface[1:] if surface.startswith("'") else surface
    if body and all(c.isdigit() or c in ".," for c in body) and any(c.isdigit() for c in body):
        return KIND_NUMERIC
    first = body[0] if body else ""
    if first.isalpha():
        return KIND_WORD
    return KIND_OTHER


def tokenize(text: str) -> list[Token]:
    """Rule-based word tokenizer.

    Whitespace split, every punctuation character detached as its own token,
    contractions split at the apostrophe, decimal/thousands separators kept
    inside numbers. Case is preserved. Pure and deterministic; the frozen
    conformance corpus in tests/data pins the rule set.
    """
    tokens: list[Token] = []
    for chunk in text.split():
        for surface in _split_chunk(chunk):
            tokens.append(Token(surface, token_kind(surface)))
    return tokens


def detokenize(tokens: Sequence[Token]) -> str:
    """Join tokens with single spaces, omitting the space before punctuation.

    The rule is fixed so that tokenize(detokenize(tokens)) == tokens.
    """
    parts: list[str] = []
    for tok in tokens:
        if parts and tok.kind == KIND_PUNCT:
            parts.append(tok.surface)
        else:
            if parts:
                parts.append(" ")
            parts.append(tok.surface)
    return "".join(parts)


# ---------------------------------------------------------------------------
# JSONL load / save
# ---------------------------------------------------------------------------

_CORE_KEYS = ("id", "author", "text", "label")


@dataclass
class LineError:
    line_no: int
    reason: str

    def as_dict(self) -> dict:
        return {"line": self.line_no, "reason": self.reason}


@dataclass
class LoadReport:
    path: str
    n_loaded: int = 0
    errors: list[LineError] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "path": self.path,
            "loaded": self.n_loaded,
            "malformed": [e.as_dict() for e in self.errors],
        }


def load_corpus_with_report(
    path: str | Path, format: str = JSONL_SCHEMA, name: str | None = None
) -> tuple[Corpus, LoadReport]:
    """Load a JSONL corpus, collecting malformed lines into a report.

    Raises CorpusError for a missing file, duplicate ids, or an empty corpus.
    """
    if format != JSONL_SCHEMA:
        raise CorpusError(f"unknown corpus format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")
    report = LoadReport(path=str(path))
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                report.errors.append(LineError(line_no, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict):
                report.errors.append(LineError(line_no, "line is not a JSON object"))
                continue
            missing = [k for k in ("id", "author", "text") if k not in obj]
            if missing:
                report.errors.append(LineError(line_no, f"missing fields: {missing}"))
                continue
            doc_id = str(obj["id"])
            if doc_id in seen:
                raise CorpusError(
                    f"duplicate document id {doc_id!r} (lines {seen[doc_id]} and {line_no})"
                )
            seen[doc_id] = line_no
            extras = tuple(
                (k, obj[k]) for k in obj if k not in _CORE_KEYS
            )
            docs.append(
                Document.from_text(
                    id=doc_id,
                    author_id=str(obj["author"]),
                    text=str(obj["text"]),
                    label=None if obj.get("label") is None else str(obj["label"]),
                    extras=extras,
                )
            )
    if not docs:
        raise CorpusError(f"empty corpus: {path}")
    report.n_loaded = len(docs)
    corpus = Corpus(name=name or path.stem, documents=tuple(docs))
    return corpus, report


def load_corpus(path: str | Path, format: str = JSONL_SCHEMA, name: str | None = None) -> Corpus:
    corpus, _ = load_corpus_with_report(path, format=format, name=name)
    return corpus


def document_as_dict(doc: Document) -> dict:
    obj = {"id": doc.id, "author": doc.author_id, "text": doc.text}
    if doc.label is not None:
        obj["label"] = doc.label
    obj.update(doc.extras_dict())
    return obj


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL, atomically (temp file + rename)."""
    path = Path(path)
    atomic_write_text(
        path,
        "".join(json.dumps(document_as_dict(d), ensure_ascii=False) + "\n" for d in corpus),
    )


def atomic_write_text(path: str | Path, content: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Splits and holdout
# ---------------------------------------------------------------------------

def split_train_test(
    corpus: Corpus, test_fraction: float, seed: int
) -> tuple[Corpus, Corpus]:
    """Deterministic train/test partition, stratified by author when possible.

    Stratification applies when every author has at least two documents; the
    test set then gets max(1, ...) documents per author via largest-remainder
    allocation. The two halves are a disjoint cover of the input.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if len(corpus) < 2:
        raise CorpusError("cannot split a corpus with fewer than 2 documents")

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    n_test_total = int(round(len(corpus) * test_fraction))
    n_test_total = min(max(n_test_total, 1), len(corpus) - 1)

    by_author: dict[str, list[int]] = {}
    for idx, doc in enumerate(corpus.documents):
        by_author.setdefault(doc.author_id, []).append(idx)

    stratify = all(len(v) >= 2 for v in by_author.values()) and len(by_author) <= n_test_total
    test_idx: set[int] = set()
    if stratify:
        authors = sorted(by_author)
        quota = {a: len(by_author[a]) * test_fraction for a in authors}
        alloc = {a: max(1, math.floor(quota[a])) for a in authors}
        # largest remainder: hand out what is left, never exhausting an author
        remaining = n_test_total - sum(alloc.values())
        order = sorted(authors, key=lambda a: (-(quota[a] - math.floor(quota[a])), a))
        pos = 0
        while remaining > 0 and pos < 10 * len(order):
            a = order[pos % len(order)]
            if alloc[a] < len(by_author[a]) - 1:
                alloc[a] += 1
                remaining -= 1
            pos += 1
        while remaining < 0:
            biggest = max(authors, key=lambda a: (alloc[a], a))
            if alloc[biggest] <= 1:
                break
            alloc[biggest] -= 1
            remaining += 1
        for a in authors:
            picks = rng.permutation(len(by_author[a]))[: alloc[a]]
            test_idx.update(by_author[a][p] for p in picks)
    else:
        picks = rng.permutation(len(corpus))[:n_test_total]
        test_idx.update(int(p) for p in picks)

    train_docs = tuple(d for i, d in enumerate(corpus.documents) if i not in test_idx)
    test_docs = tuple(d for i, d in enumerate(corpus.documents) if i in test_idx)
    train = Corpus(name=f"{corpus.name}-train", documents=train_docs, stage=corpus.stage)
    test = Corpus(name=f"{corpus.name}-test", documents=test_docs, stage=corpus.stage)
    return train, test


def holdout_fewshot(corpus: Corpus, n: int = 3) -> tuple[list[Document], Corpus]:
    """Hold out the first n documents (in corpus order) as few-shot material."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if len(corpus) <= n:
        raise CorpusError(f"corpus has {len(corpus)} documents; need more than {n}")
    held = list(corpus.documents[:n])
    rest = Corpus(
        name=corpus.name,
        documents=tuple(corpus.documents[n:]),
        stage=corpus.stage,
    )
    return held, rest
