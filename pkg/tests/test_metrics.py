"""Metric definitions against independent oracles and published anchors."""

import numpy as np
import pytest

from privtext.corpus import Corpus, Document
from privtext.metrics import (
    EmbeddingSet,
    EvalReport,
    MetricError,
    ShiftSummary,
    TradeoffInputs,
    indistinguishability,
    load_embedding_csv,
    mean_perplexity,
    projection_csv,
    save_embedding_csv,
    semantic_similarity,
    token_shift,
    tradeoff,
)


def random_set(n=20, m=6, seed=0, ids=None):
    rng = np.random.default_rng(seed)
    ids = ids or tuple(f"d{i}" for i in range(n))
    return EmbeddingSet(tuple(ids), rng.standard_normal((n, m)))


# -- semantic similarity -------------------------------------------------------

def test_ss_identity_is_one():
    es = random_set()
    assert semantic_similarity(es, es) == pytest.approx(1.0)


def test_ss_arithmetic_mean():
    orig = EmbeddingSet(("a", "b"), np.array([[1.0, 0.0], [0.0, 1.0]]))
    priv = EmbeddingSet(("a", "b"), np.array([[1.0, 0.0], [1.0, 0.0]]))
    # cosines: 1.0 and 0.0 -> mean 0.5
    assert semantic_similarity(orig, priv) == pytest.approx(0.5)


def test_ss_matches_direct_formula_oracle():
    rng = np.random.default_rng(42)
    vecs = rng.standard_normal((2, 50, 6))
    vecs /= np.linalg.norm(vecs, axis=2, keepdims=True)  # 50 random unit-vector pairs
    ids = tuple(f"d{i}" for i in range(50))
    orig, priv = EmbeddingSet(ids, vecs[0]), EmbeddingSet(ids, vecs[1])
    # brute-force pairwise oracle
    total = 0.0
    for a, b in zip(orig.vectors, priv.vectors):
        total += float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    assert semantic_similarity(orig, priv) == pytest.approx(total / 50, abs=1e-12)


def test_ss_validates_inputs():
    mismatched = random_set(ids=tuple(f"x{i}" for i in range(20)))
    with pytest.raises(MetricError):
        semantic_similarity(mismatched, random_set())
    zero = EmbeddingSet(("a",), np.zeros((1, 3)))
    with pytest.raises(MetricError):
        semantic_similarity(zero, zero)


# -- indistinguishability --------------------------------------------------------

def rank_oracle(orig: EmbeddingSet, priv: EmbeddingSet) -> float:
    """Independent full-sort rank implementation."""
    n = len(orig.doc_ids)
    total = 0.0
    for i in range(n):
        a = orig.vectors[i]
        sims = []
        for j in range(n):
            b = priv.vectors[j]
            sims.append(float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b))))
        order = sorted(range(n), key=lambda j: (-sims[j], j))
        k = order.index(i) + 1
        total += (k - 1) / (n - 1)
    return total / n


def test_in_identity_is_zero():
    es = random_set(seed=3)
    assert indistinguishability(es, es) == 0.0


def test_in_swapped_pair_is_one():
    orig = EmbeddingSet(("a", "b"), np.array([[1.0, 0.0], [0.0, 1.0]]))
    priv = EmbeddingSet(("a", "b"), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert indistinguishability(orig, priv) == pytest.approx(1.0)


def test_in_matches_bruteforce_oracle():
    for seed in range(5):
        orig = random_set(n=100, seed=seed)
        priv = random_set(n=100, seed=seed + 50)
        assert indistinguishability(orig, priv) == pytest.approx(rank_oracle(orig, priv), abs=1e-12)


def test_in_invariant_under_orthogonal_transform():
    rng = np.random.default_rng(8)
    orig, priv = random_set(n=30, seed=4), random_set(n=30, seed=5)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    orig_r = EmbeddingSet(orig.doc_ids, orig.vectors @ q)
    priv_r = EmbeddingSet(priv.doc_ids, priv.vectors @ q)
    assert indistinguishability(orig_r, priv_r) == pytest.approx(
        indistinguishability(orig, priv), abs=1e-12
    )


def test_in_requires_two_docs():
    one = EmbeddingSet(("a",), np.ones((1, 3)))
    with pytest.raises(MetricError):
        indistinguishability(one, one)


# -- token shift ------------------------------------------------------------------

def corpus_with_counts(counts, prefix="p"):
    docs = tuple(
        Document.from_text(id=f"d{i}", author_id="a", text=" ".join(["w"] * c))
        for i, c in enumerate(counts)
    )
    return Corpus(name=prefix, documents=docs)


def test_shift_identity_all_zero():
    priv = corpus_with_counts([4, 6, 8])
    summary = token_shift(priv, priv)
    assert summary.mean == 0.0
    assert (summary.p5, summary.p50, summary.p95) == (0.0, 0.0, 0.0)
    assert summary.outliers == ()


def test_shift_simple_arithmetic():
    priv = corpus_with_counts([5, 5, 5])
    recon = corpus_with_counts([3, 5, 7])
    summary = token_shift(priv, recon)
    assert summary.mean == 0.0
    assert summary.p50 == 0.0


def quantile_oracle(values, q):
    """Sort-based linear-interpolation quantile, written independently."""
    xs = sorted(values)
    pos = q * (len(xs) - 1)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return xs[lo] * (1 - frac) + xs[hi] * frac


def test_shift_planted_outliers_match_quantile_oracle():
    rng = np.random.default_rng(12)
    base = rng.integers(-3, 4, size=1000)
    base[::97] = 60  # planted outliers
    priv = corpus_with_counts([100] * 1000)
    recon = corpus_with_counts([100 + int(s) for s in base])
    summary = token_shift(priv, recon)
    shifts = base.astype(float)
    for attr, q in [("p5", 0.05), ("p25", 0.25), ("p50", 0.5), ("p75", 0.75), ("p95", 0.95)]:
        assert getattr(summary, attr) == pytest.approx(quantile_oracle(shifts, q), abs=1e-9)
    # outliers: beyond 1.5*IQR, excluded from the mean
    q1, q3 = quantile_oracle(shifts, 0.25), quantile_oracle(shifts, 0.75)
    iqr = q3 - q1
    inliers = [s for s in shifts if q1 - 1.5 * iqr <= s <= q3 + 1.5 * iqr]
    outliers = [s for s in shifts if not (q1 - 1.5 * iqr <= s <= q3 + 1.5 * iqr)]
    assert summary.mean == pytest.approx(sum(inliers) / len(inliers))
    assert len(summary.outliers) == len(outliers)


def test_shift_id_mismatch():
    with pytest.raises(MetricError):
        token_shift(corpus_with_counts([3]), corpus_with_counts([3, 4]))


# -- mean perplexity ----------------------------------------------------------------

class StubScorer:
    def __init__(self, mapping):
        self.mapping = mapping

    def perplexities(self, texts):
        return [self.mapping[t] for t in texts]

    def embeddings(self, texts):
        raise NotImplementedError


def test_mean_perplexity_arithmetic():
    scorer = StubScorer({"a": 10.0, "b": 20.0})
    assert mean_perplexity(["a", "b"], scorer) == 15.0


def test_mean_perplexity_empty_errors():
    with pytest.raises(MetricError):
        mean_perplexity([], StubScorer({}))


def test_mean_perplexity_rejects_nonfinite():
    scorer = StubScorer({"a": float("inf")})
    with pytest.raises(MetricError):
        mean_perplexity(["a"], scorer)


# -- trade-off ------------------------------------------------------------------------

def test_tradeoff_published_anchor_mhb():
    inp = TradeoffInputs(u_priv=63.4, u_orig=71.83, p_priv=23.9, p_orig=23.94)
    assert tradeoff(inp) == pytest.approx(-0.12, abs=0.005)


def test_tradeoff_published_anchor_yr():
    inp = TradeoffInputs(u_priv=93.2, u_orig=95.68, p_priv=43.24, p_orig=95.03)
    assert tradeoff(inp) == pytest.approx(0.52, abs=0.005)


def test_tradeoff_noop_is_zero():
    assert tradeoff(TradeoffInputs(50.0, 50.0, 30.0, 30.0)) == 0.0


def test_tradeoff_majority_guess_adjustment():
    inp = TradeoffInputs(u_priv=80.0, u_orig=90.0, p_priv=10.0, p_orig=20.0, u_majority_guess=60.0)
    assert tradeoff(inp) == pytest.approx((80 - 60) / (90 - 60) - 0.5)


def test_tradeoff_monotonicity():
    base = dict(u_priv=70.0, u_orig=90.0, p_priv=30.0, p_orig=60.0)
    t0 = tradeoff(TradeoffInputs(**base))
    assert tradeoff(TradeoffInputs(**{**base, "u_priv": 75.0})) > t0
    assert tradeoff(TradeoffInputs(**{**base, "p_priv": 35.0})) < t0


def test_tradeoff_preconditions():
    with pytest.raises(MetricError):
        tradeoff(TradeoffInputs(50.0, 50.0, 10.0, 0.0))
    with pytest.raises(MetricError):
        tradeoff(TradeoffInputs(50.0, 60.0, 10.0, 20.0, u_majority_guess=60.0))
    with pytest.raises(MetricError):
        TradeoffInputs(u_priv=120.0, u_orig=90.0, p_priv=10.0, p_orig=20.0)


# -- report / csv plumbing ---------------------------------------------------------------

def test_embedding_csv_roundtrip(tmp_path):
    es = random_set(n=5, m=3, seed=6)
    path = tmp_path / "emb.csv"
    save_embedding_csv(es, path)
    loaded = load_embedding_csv(path)
    assert loaded.doc_ids == es.doc_ids
    np.testing.assert_array_equal(loaded.vectors, es.vectors)


def test_eval_report_csv_schema():
    report = EvalReport()
    report.add_row(dataset="yr", mechanism="cmp", eps=1.0, stage="mldp", p_static=20.23)
    csv_text = report.to_csv()
    header = csv_text.splitlines()[0]
    assert header == (
        "dataset,mechanism,eps,stage,util,util_std,ss,co,p_static,p_adaptive,"
        "indistinguishability,to_static,to_adaptive"
    )
    assert "yr,cmp,1.0,mldp,,,,,20.23,,,," in csv_text
    with pytest.raises(MetricError):
        report.add_row(bogus=1)


def test_projection_csv():
    es = random_set(n=8, m=5, seed=7)
    text = projection_csv(es, ["a"] * 8)
    lines = text.strip().splitlines()
    assert lines[0] == "doc_id,author,x,y"
    assert len(lines) == 9


def test_shift_summary_as_dict_sorted():
    s = ShiftSummary(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, (("d1", 60),))
    d = s.as_dict()
    assert d["outliers"] == [{"doc_id": "d1", "shift": 60}]
