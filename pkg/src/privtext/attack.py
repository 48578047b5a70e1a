"""Authorship-attribution attacks and downstream-utility evaluation.

The classifier is a deterministic multinomial logistic model over hashed
unigram+bigram term frequencies — a desk-scale stand-in for fine-tuned
transformer classifiers, so absolute scores are not comparable to published
numbers; directional comparisons are.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from privtext.budget import BudgetPolicy
from privtext.corpus import Corpus, Document
from privtext.pipeline import SanitizationRun, sanitize_corpus

N_BUCKETS = 2 ** 18

MODE_STATIC = "static"
MODE_ADAPTIVE = "adaptive"


class AttackError(ValueError):
    pass


def _bucket(term: str, seed: int) -> int:
    digest = hashlib.blake2b(term.encode("utf-8"), digest_size=8, salt=str(seed).encode()[:16])
    return int.from_bytes(digest.digest(), "little") % N_BUCKETS


def doc_features(doc: Document, seed: int) -> dict[int, float]:
    """Hashed unigram+bigram term-frequency counts for one document."""
    surfaces = [t.surface for t in doc.tokens]
    counts: dict[int, float] = {}
    for term in surfaces:
        b = _bucket(term, seed)
        counts[b] = counts.get(b, 0.0) + 1.0
    for a, b_ in zip(surfaces, surfaces[1:]):
        b = _bucket(f"{a}\x1f{b_}", seed)
        counts[b] = counts.get(b, 0.0) + 1.0
    return counts


def _feature_matrix(docs: list[Document], seed: int) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for doc in docs:
        counts = doc_features(doc, seed)
        for bucket in sorted(counts):
            indices.append(bucket)
            data.append(counts[bucket])
        indptr.append(len(indices))
    mat = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(docs), N_BUCKETS),
    )
    norms = np.sqrt(mat.multiply(mat).sum(axis=1)).A1
    norms[norms == 0.0] = 1.0
    return sparse.diags(1.0 / norms) @ mat


@dataclass
class TextClassifier:
    classes: tuple[str, ...]
    weights: np.ndarray  # n_buckets x n_classes
    bias: np.ndarray     # n_classes
    seed: int
    target: str

    def predict(self, docs: list[Document]) -> list[str]:
        x = _feature_matrix(docs, self.seed)
        scores = x @ self.weights + self.bias[None, :]
        picks = np.argmax(scores, axis=1)
        return [self.classes[p] for p in picks]

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            version=1,
            classes=np.array(self.classes),
            weights=self.weights,
            bias=self.bias,
            seed=self.seed,
            target=self.target,
        )

    @classmethod
    def load(cls, path: str | Path) -> "TextClassifier":
        blob = np.load(path, allow_pickle=False)
        if int(blob["version"]) != 1:
            raise AttackError("unsupported model snapshot version")
        return cls(
            classes=tuple(str(c) for c in blob["classes"]),
            weights=blob["weights"],
            bias=blob["bias"],
            seed=int(blob["seed"]),
            target=str(blob["target"]),
        )


def _target_value(doc: Document, target: str) -> str:
    if target == "author":
        return doc.author_id
    if target == "label":
        if doc.label is None:
            raise AttackError(f"document {doc.id} has no label")
        return doc.label
    raise AttackError(f"unknown target {target!r}")


def train_classifier(
    train: Corpus,
    target: str = "author",
    seed: int = 0,
    iterations: int = 200,
    learning_rate: float = 2.0,
    l2: float = 1e-4,
) -> TextClassifier:
    """Fit the multiclass logistic scorer with full-batch gradient descent.

    Convex objective, zero init: training is deterministic given the seed
    (the seed salts feature hashing, not the optimizer).
    """
    docs = list(train.documents)
    labels = [_target_value(d, target) for d in docs]
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise AttackError("need at least 2 classes to train")
    y = np.array([classes.index(l) for l in labels])
    x = _feature_matrix(docs, seed)
    n, c = len(docs), len(classes)
    onehot = np.zeros((n, c))
    onehot[np.arange(n), y] = 1.0

    weights = np.zeros((N_BUCKETS, c))
    bias = np.zeros(c)
    for _ in range(iterations):
        scores = x @ weights + bias[None, :]
        scores -= scores.max(axis=1, keepdims=True)
        probs = np.exp(scores)
        probs /= probs.sum(axis=1, keepdims=True)
        err = (probs - onehot) / n
        grad_w = (x.T @ err) + l2 * weights
        grad_b = err.sum(axis=0)
        weights -= learning_rate * grad_w
        bias -= learning_rate * grad_b
    return TextClassifier(classes=classes, weights=weights, bias=bias, seed=seed, target=target)


def micro_f1(predictions: list[str], truth: list[str]) -> float:
    """Micro-averaged F1 as a percentage (equals accuracy for multiclass)."""
    if len(predictions) != len(truth):
        raise AttackError("predictions and truth must have equal length")
    if not truth:
        raise AttackError("empty inputs")
    tp = sum(1 for p, t in zip(predictions, truth) if p == t)
    # single-label multiclass: FP and FN both equal the miss count, so
    # precision = recall = accuracy
    return 100.0 * tp / len(truth)


@dataclass
class AttackReport:
    mode: str
    train_stage: str
    test_stage: str
    micro_f1: float
    per_class_f1: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "train_stage": self.train_stage,
            "test_stage": self.test_stage,
            "micro_f1": self.micro_f1,
            "per_class_f1": self.per_class_f1,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


def per_class_f1(predictions: list[str], truth: list[str]) -> dict[str, float]:
    classes = sorted(set(truth) | set(predictions))
    out = {}
    for cls in classes:
        tp = sum(1 for p, t in zip(predictions, truth) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(predictions, truth) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(predictions, truth) if p != cls and t == cls)
        denom = 2 * tp + fp + fn
        out[cls] = 100.0 * 2 * tp / denom if denom else 0.0
    return out


def _check_author_overlap(train: Corpus, test: Corpus) -> None:
    overlap = set(train.authors()) & set(test.authors())
    if not overlap:
        raise AttackError("train and test author sets are disjoint")


def run_static_attack(train_clean: Corpus, test_sanitized: Corpus, seed: int = 0) -> AttackReport:
    """Attacker without mechanism knowledge: trains on clean text."""
    if train_clean.stage != "clean":
        raise AttackError("static attacker must train on clean-stage text")
    _check_author_overlap(train_clean, test_sanitized)
    model = train_classifier(train_clean, target="author", seed=seed)
    preds = model.predict(list(test_sanitized.documents))
    truth = [d.author_id for d in test_sanitized.documents]
    return AttackReport(
        mode=MODE_STATIC,
        train_stage=train_clean.stage,
        test_stage=test_sanitized.stage,
        micro_f1=micro_f1(preds, truth),
        per_class_f1=per_class_f1(preds, truth),
    )


def run_adaptive_attack(
    train_clean: Corpus,
    test_sanitized: Corpus,
    mech,
    policy: BudgetPolicy,
    seed: int,
) -> AttackReport:
    """Attacker with mechanism knowledge: sanitizes the train split first."""
    if test_sanitized.stage == "clean":
        raise AttackError("adaptive attacker targets sanitized/reconstructed text")
    _check_author_overlap(train_clean, test_sanitized)
    train_sanitized, _ = sanitize_corpus(
        SanitizationRun(mechanism=mech, policy=policy, seed=seed, input=train_clean)
    )
    model = train_classifier(train_sanitized, target="author", seed=seed)
    preds = model.predict(list(test_sanitized.documents))
    truth = [d.author_id for d in test_sanitized.documents]
    return AttackReport(
        mode=MODE_ADAPTIVE,
        train_stage=train_sanitized.stage,
        test_stage=test_sanitized.stage,
        micro_f1=micro_f1(preds, truth),
        per_class_f1=per_class_f1(preds, truth),
    )


def run_utility_eval(
    train: Corpus, test: Corpus, seeds: tuple[int, ...] = (0, 1, 2)
) -> tuple[float, float]:
    """Label-classification utility, repeated per seed; returns (mean, std)."""
    if any(d.label is None for d in train.documents) or any(
        d.label is None for d in test.documents
    ):
        raise AttackError("utility evaluation needs labels on both splits")
    scores = []
    for seed in seeds:
        model = train_classifier(train, target="label", seed=seed)
        preds = model.predict(list(test.documents))
        truth = [d.label for d in test.documents]
        scores.append(micro_f1(preds, truth))
    arr = np.array(scores)
    return float(arr.mean()), float(arr.std())
