"""Backend equivalence and contract tests for the NN kernels."""

import numpy as np
import pytest

from privtext import _kernels
from privtext._kernels import nn_numpy

BACKENDS = [nn_numpy]
if _kernels.BACKEND == "cython":
    from privtext._kernels import _nncore

    BACKENDS.append(_nncore)


def reference_nearest(matrix, query):
    # independent oracle: full distance vector + first-min scan
    d2 = ((matrix - query[None, :]) ** 2).sum(axis=1)
    best = 0
    for i in range(1, len(d2)):
        if d2[i] < d2[best]:
            best = i
    return best


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.backend_name())
def test_random_queries_match_bruteforce(impl):
    rng = np.random.default_rng(7)
    matrix = np.ascontiguousarray(rng.standard_normal((200, 16)))
    queries = np.ascontiguousarray(rng.standard_normal((1000, 16)))
    batch = impl.nearest_index_batch(matrix, queries)
    for q, got in zip(queries, batch):
        assert impl.nearest_index(matrix, q) == got
        assert reference_nearest(matrix, q) == got


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.backend_name())
def test_exact_tie_breaks_to_lowest_index(impl):
    # integer coordinates: all squared distances exactly representable
    matrix = np.ascontiguousarray(
        np.array([[5.0, 0.0], [3.0, 0.0], [0.0, 4.0], [0.0, 0.0], [-3.0, 0.0]])
    )
    assert impl.nearest_index(matrix, np.array([0.0, 0.0])) == 3  # exact zero hit
    # rows 1 and 3 tie at squared distance 1 -> lowest index wins
    m2 = np.ascontiguousarray(np.array([[8.0, 0.0], [1.0, 0.0], [9.0, 9.0], [-1.0, 0.0]]))
    assert impl.nearest_index(m2, np.array([0.0, 0.0])) == 1
    batch = impl.nearest_index_batch(m2, np.zeros((3, 2)))
    assert (batch == 1).all()


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.backend_name())
def test_exclusion_mask(impl):
    matrix = np.ascontiguousarray(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    mask = np.array([1, 0, 0], dtype=np.uint8)
    assert impl.nearest_index(matrix, np.array([0.1, 0.0]), mask) == 1
    with pytest.raises(ValueError):
        impl.nearest_index(matrix, np.array([0.0, 0.0]), np.ones(3, dtype=np.uint8))


def test_backends_agree_on_ties_and_random_data():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(11)
    matrix = np.ascontiguousarray(rng.integers(-5, 6, size=(64, 8)).astype(np.float64))
    queries = np.ascontiguousarray(rng.integers(-5, 6, size=(500, 8)).astype(np.float64))
    a = BACKENDS[0].nearest_index_batch(matrix, queries)
    b = BACKENDS[1].nearest_index_batch(matrix, queries)
    assert (a == b).all()
    for q in queries[:100]:
        assert BACKENDS[0].nearest_index(matrix, q) == BACKENDS[1].nearest_index(matrix, q)


def test_sq_distances_match():
    rng = np.random.default_rng(3)
    matrix = np.ascontiguousarray(rng.standard_normal((50, 5)))
    q = rng.standard_normal(5)
    expected = np.array([((row - q) ** 2).sum() for row in matrix])
    for impl in BACKENDS:
        np.testing.assert_allclose(impl.sq_distances(matrix, q), expected, rtol=1e-12)
