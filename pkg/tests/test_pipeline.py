"""Pipeline: per-token replay, length preservation, budget closure, parallelism."""

import json

import numpy as np
import pytest

from privtext.budget import BudgetPolicy
from privtext.corpus import Corpus, Document
from privtext.embeddings import covariance, EmbeddingStore
from privtext.mechanisms import (
    CmpMechanism,
    DiffractorMechanism,
    MahalanobisMechanism,
    MechanismConfig,
    SanTextMechanism,
    diffractor_build,
)
from privtext.pipeline import (
    SanitizationRun,
    assert_budget_closure,
    sanitize_corpus,
    sanitize_document,
)
from privtext.rng import TokenStreams
from tests.conftest import make_corpus


def store_for_corpus(corpus, dim=4, seed=0, extra_words=()):
    vocab = sorted({t.surface for d in corpus.documents for t in d.tokens} | set(extra_words))
    rng = np.random.default_rng(seed)
    return EmbeddingStore(vocab, rng.standard_normal((len(vocab), dim)))


def test_empty_document_stays_empty(toy_store):
    doc = Document.from_text(id="e", author_id="a", text="")
    out, stats = sanitize_document(doc, CmpMechanism(toy_store), 1.0, TokenStreams(0))
    assert out.text == "" and out.tokens == ()
    assert stats == (0, 0)


def test_all_oov_document_unchanged(toy_store):
    doc = Document.from_text(id="o", author_id="a", text="zz qq xx")
    out, stats = sanitize_document(doc, CmpMechanism(toy_store), 1.0, TokenStreams(0))
    assert out.text == doc.text
    assert stats.n_oov == 3 and stats.n_perturbed == 0


def test_manual_replay_oracle(toy_store):
    # 20-token doc equals token-by-token manual application on the same streams
    words = list(toy_store.words)
    text = " ".join(words[i % len(words)] for i in range(20))
    doc = Document.from_text(id="doc-7", author_id="a", text=text)
    mech = CmpMechanism(toy_store)
    streams = TokenStreams(99)
    out, _ = sanitize_document(doc, mech, 1.3, streams)
    manual = [
        mech.sanitize(tok.surface, 1.3, streams.for_token("doc-7", i)).word
        for i, tok in enumerate(doc.tokens)
    ]
    assert [t.surface for t in out.tokens] == manual


def test_metadata_copied_and_text_regenerated(toy_store):
    doc = Document.from_text(id="m", author_id="auth", text="cat dog", label="pos")
    out, _ = sanitize_document(doc, CmpMechanism(toy_store), 100.0, TokenStreams(1))
    assert (out.id, out.author_id, out.label) == ("m", "auth", "pos")
    assert out.text == " ".join(t.surface for t in out.tokens)


def corpus_and_mechs(tmp_path=None):
    corpus = make_corpus(n_docs=12, n_authors=3, words=("alpha", "beta", "gamma", "delta"), seed=2)
    store = store_for_corpus(corpus)
    mechs = [
        CmpMechanism(store),
        MahalanobisMechanism(store, covariance(store, 0.2)),
        DiffractorMechanism(diffractor_build(store, 2, seed=0)),
        SanTextMechanism(store, MechanismConfig(candidate_k=3)),
    ]
    return corpus, mechs


def test_length_preserved_for_all_mechanisms():
    corpus, mechs = corpus_and_mechs()
    policy = BudgetPolicy.bounded(1.0, 8.0)
    for mech in mechs:
        out, _ = sanitize_corpus(
            SanitizationRun(mechanism=mech, policy=policy, seed=5, input=corpus)
        )
        for a, b in zip(corpus.documents, out.documents):
            assert a.n_tokens == b.n_tokens


def test_budget_closure_bounded():
    corpus, mechs = corpus_and_mechs()
    policy = BudgetPolicy.bounded(2.0, 8.0)
    out, ledger = sanitize_corpus(
        SanitizationRun(mechanism=mechs[0], policy=policy, seed=5, input=corpus)
    )
    assert_budget_closure(ledger)
    for row in ledger.rows:
        assert row.composed_eps == pytest.approx(policy.doc_budget, rel=1e-9)


def test_bounded_published_average_composes_to_208(toy_store):
    # 50 docs averaging 208.62 tokens; base eps 1 -> budget 208 on every row
    rng = np.random.default_rng(6)
    lengths = rng.integers(150, 260, size=50)
    lengths[-1] += 10431 - lengths.sum()
    assert lengths.sum() == 10431  # 10431 / 50 = 208.62
    docs = tuple(
        Document.from_text(id=f"d{i}", author_id="a", text=" ".join(["cat"] * int(n)))
        for i, n in enumerate(lengths)
    )
    corpus = Corpus(name="avg", documents=docs)
    from privtext.budget import dataset_avg_words

    avg = dataset_avg_words(corpus)
    assert avg == pytest.approx(208.62)
    policy = BudgetPolicy.bounded(1.0, avg)
    assert policy.doc_budget == 208
    _, ledger = sanitize_corpus(
        SanitizationRun(mechanism=CmpMechanism(toy_store), policy=policy, seed=0, input=corpus)
    )
    for row in ledger.rows:
        assert row.composed_eps == pytest.approx(208.0, rel=1e-9)


def test_unbounded_composition_scales_with_length(toy_store):
    docs = (
        Document.from_text(id="short", author_id="a", text=" ".join(["cat"] * 10)),
        Document.from_text(id="long", author_id="a", text=" ".join(["cat"] * 100)),
    )
    corpus = Corpus(name="t", documents=docs)
    policy = BudgetPolicy.unbounded(3.0)
    _, ledger = sanitize_corpus(
        SanitizationRun(mechanism=CmpMechanism(toy_store), policy=policy, seed=0, input=corpus)
    )
    assert ledger.rows[0].composed_eps == pytest.approx(30.0)
    assert ledger.rows[1].composed_eps == pytest.approx(300.0)


def test_same_seed_same_output_different_seed_differs():
    corpus, mechs = corpus_and_mechs()
    policy = BudgetPolicy.bounded(1.0, 8.0)
    run = lambda seed: sanitize_corpus(
        SanitizationRun(mechanism=mechs[0], policy=policy, seed=seed, input=corpus)
    )[0]
    a, b, c = run(7), run(7), run(8)
    assert [d.text for d in a.documents] == [d.text for d in b.documents]
    assert [d.text for d in a.documents] != [d.text for d in c.documents]


def test_parallel_equals_serial():
    corpus, mechs = corpus_and_mechs()
    policy = BudgetPolicy.bounded(1.0, 8.0)
    for mech in mechs:
        serial, ledger_s = sanitize_corpus(
            SanitizationRun(mechanism=mech, policy=policy, seed=11, input=corpus, workers=1)
        )
        parallel, ledger_p = sanitize_corpus(
            SanitizationRun(mechanism=mech, policy=policy, seed=11, input=corpus, workers=4)
        )
        assert [d.text for d in serial.documents] == [d.text for d in parallel.documents]
        assert ledger_s.to_csv() == ledger_p.to_csv()


def test_output_order_and_stage():
    corpus, mechs = corpus_and_mechs()
    policy = BudgetPolicy.unbounded(1.0)
    out, _ = sanitize_corpus(
        SanitizationRun(mechanism=mechs[3], policy=policy, seed=0, input=corpus)
    )
    assert out.ids() == corpus.ids()
    assert out.stage == "sanitized"
    extras = out.documents[0].extras_dict()
    assert extras["sanitized"] is True
    assert extras["mechanism"] == "santext"
    assert extras["eps_word"] == 1.0


def test_run_log_written(tmp_path):
    corpus, mechs = corpus_and_mechs()
    policy = BudgetPolicy.bounded(1.0, 8.0)
    log_path = tmp_path / "run.jsonl"
    sanitize_corpus(
        SanitizationRun(
            mechanism=mechs[0], policy=policy, seed=0, input=corpus, log_path=log_path
        )
    )
    lines = [json.loads(l) for l in log_path.read_text().splitlines()]
    assert len(lines) == len(corpus)
    assert all(l["status"] == "ok" for l in lines)
    assert [l["doc_id"] for l in lines] == list(corpus.ids())


def test_oov_not_charged_but_recorded(toy_store):
    doc = Document.from_text(id="x", author_id="a", text="cat zz dog")
    corpus = Corpus(name="t", documents=(doc,))
    policy = BudgetPolicy.unbounded(5.0)
    _, ledger = sanitize_corpus(
        SanitizationRun(mechanism=CmpMechanism(toy_store), policy=policy, seed=0, input=corpus)
    )
    assert ledger.rows[0].n_oov_passthrough == 1
    assert ledger.rows[0].n_tokens == 3
