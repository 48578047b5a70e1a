"""Corpus module: tokenizer, loaders, splits, holdout."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privtext.corpus import (
    Corpus,
    CorpusError,
    Document,
    detokenize,
    holdout_fewshot,
    load_corpus,
    load_corpus_with_report,
    save_corpus,
    split_train_test,
    token_kind,
    tokenize,
)
from tests.conftest import DATA_DIR, make_corpus


# -- tokenize ---------------------------------------------------------------

def surfaces(text):
    return [t.surface for t in tokenize(text)]


def test_tokenize_examples():
    assert surfaces("Hello, world!") == ["Hello", ",", "world", "!"]
    assert surfaces("") == []
    assert surfaces("a b") == ["a", "b"]


def test_tokenize_keeps_case_and_contractions():
    assert surfaces("We'd LOVE it") == ["We", "'d", "LOVE", "it"]
    assert surfaces("$40.00 off!") == ["$", "40.00", "off", "!"]
    assert surfaces("b-day") == ["b", "-", "day"]


def test_token_kinds():
    kinds = {t.surface: t.kind for t in tokenize("Karen paid $40.00 ... 'nice'")}
    assert kinds["Karen"] == "word"
    assert kinds["$"] == "punctuation"
    assert kinds["40.00"] == "numeric"
    assert kinds["'nice"] == "word"
    assert kinds["."] == "punctuation"


def test_token_kind_deterministic_from_surface():
    for surface in ["x", "'ll", "12,000", "?", "3rd"]:
        assert token_kind(surface) == token_kind(surface)


def test_conformance_corpus_frozen():
    # 500-sentence regression contract for the rule set
    path = DATA_DIR / "tokenizer_conformance.jsonl"
    n = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            assert surfaces(rec["text"]) == rec["tokens"], rec["text"]
            n += 1
    assert n == 500


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80))
def test_tokenize_pure_and_roundtrip_stable(text):
    toks1 = tokenize(text)
    toks2 = tokenize(text)
    assert toks1 == toks2
    if text.strip():
        assert len(toks1) >= 1
    rebuilt = detokenize(toks1)
    assert tokenize(rebuilt) == toks1


def test_nonempty_text_has_tokens():
    assert len(tokenize("x")) == 1


# -- load / save ------------------------------------------------------------

def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_load_corpus_identity(tmp_path):
    rows = [
        {"id": "a", "author": "u1", "text": "hello there", "label": "pos"},
        {"id": "b", "author": "u2", "text": "bye now"},
        {"id": "c", "author": "u1", "text": "third doc , with commas"},
    ]
    path = tmp_path / "c.jsonl"
    write_jsonl(path, rows)
    corpus = load_corpus(path)
    assert corpus.ids() == ("a", "b", "c")
    assert corpus.documents[0].label == "pos"
    assert corpus.documents[1].label is None
    assert corpus.documents[2].tokens[2].surface == ","


def test_load_corpus_duplicate_id(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [{"id": "a", "author": "u", "text": "x"}, {"id": "a", "author": "u", "text": "y"}])
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(path)


def test_load_corpus_missing_file(tmp_path):
    with pytest.raises(CorpusError, match="not found"):
        load_corpus(tmp_path / "nope.jsonl")


def test_load_corpus_empty(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("")
    with pytest.raises(CorpusError, match="empty"):
        load_corpus(path)


def test_load_corpus_malformed_lines_reported(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(
        '{"id": "a", "author": "u", "text": "ok"}\n'
        "not json at all\n"
        '{"author": "u", "text": "missing id"}\n'
        '{"id": "b", "author": "u", "text": "fine"}\n'
    )
    corpus, report = load_corpus_with_report(path)
    assert corpus.ids() == ("a", "b")
    assert [e.line_no for e in report.errors] == [2, 3]


def test_load_corpus_10k_matches_line_scan_oracle(tmp_path):
    rows = [{"id": f"doc{i}", "author": f"a{i % 7}", "text": f"text number {i}"} for i in range(10000)]
    path = tmp_path / "big.jsonl"
    write_jsonl(path, rows)
    corpus = load_corpus(path)
    # independent oracle: raw line-by-line scan
    oracle_ids = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            oracle_ids.append(json.loads(line)["id"])
    assert list(corpus.ids()) == oracle_ids
    assert len(corpus) == 10000


def test_save_load_roundtrip_field_for_field(tmp_path):
    corpus = make_corpus(n_docs=6, labels=["x", "y"])
    # attach extras like a sanitized corpus would carry
    docs = [
        Document.from_text(
            id=d.id, author_id=d.author_id, text=d.text, label=d.label,
            extras=(("sanitized", True), ("eps_word", 1.5)),
        )
        for d in corpus.documents
    ]
    corpus = Corpus(name="synthetic", documents=tuple(docs))
    path = tmp_path / "out.jsonl"
    save_corpus(corpus, path)
    reloaded = load_corpus(path, name="synthetic")
    assert reloaded.ids() == corpus.ids()
    for a, b in zip(corpus.documents, reloaded.documents):
        assert (a.id, a.author_id, a.text, a.label) == (b.id, b.author_id, b.text, b.label)
        assert a.extras_dict() == b.extras_dict()
        assert a.tokens == b.tokens


# -- splits -----------------------------------------------------------------

def test_split_deterministic_and_exact():
    corpus = make_corpus(n_docs=100, n_authors=10)
    tr1, te1 = split_train_test(corpus, 0.1, seed=7)
    tr2, te2 = split_train_test(corpus, 0.1, seed=7)
    assert te1.ids() == te2.ids()
    assert len(tr1) == 90 and len(te1) == 10
    assert set(tr1.ids()) | set(te1.ids()) == set(corpus.ids())
    assert set(tr1.ids()) & set(te1.ids()) == set()


def test_split_different_seed_differs():
    corpus = make_corpus(n_docs=100, n_authors=10)
    _, te1 = split_train_test(corpus, 0.1, seed=1)
    _, te2 = split_train_test(corpus, 0.1, seed=2)
    assert te1.ids() != te2.ids()


def test_split_stratified_two_authors_exhaustive():
    # 10 docs, 2 authors x 5, fraction 0.2: every seed yields one test doc per author
    corpus = make_corpus(n_docs=10, n_authors=2)
    for seed in range(50):
        _, test = split_train_test(corpus, 0.2, seed=seed)
        authors = [d.author_id for d in test.documents]
        assert len(test) == 2
        assert sorted(set(authors)) == ["author0", "author1"]


def test_split_single_doc_errors():
    corpus = make_corpus(n_docs=1)
    with pytest.raises(CorpusError):
        split_train_test(corpus, 0.5, seed=0)


def test_split_no_loss_property():
    corpus = make_corpus(n_docs=37, n_authors=5)
    train, test = split_train_test(corpus, 0.25, seed=3)
    assert sorted(train.ids() + test.ids()) == sorted(corpus.ids())


# -- holdout ----------------------------------------------------------------

def test_holdout_first_n_in_order():
    corpus = make_corpus(n_docs=5)
    held, rest = holdout_fewshot(corpus, 3)
    assert [d.id for d in held] == ["d0", "d1", "d2"]
    assert rest.ids() == ("d3", "d4")


def test_holdout_zero_is_identity():
    corpus = make_corpus(n_docs=4)
    held, rest = holdout_fewshot(corpus, 0)
    assert held == []
    assert rest.ids() == corpus.ids()


def test_holdout_too_small_errors():
    corpus = make_corpus(n_docs=3)
    with pytest.raises(CorpusError):
        holdout_fewshot(corpus, 3)
