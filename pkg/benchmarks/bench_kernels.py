"""Benchmark: compiled NN kernel vs the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--vocab 50000] [--dim 300]

Times the single-query and batch paths on a synthetic vocabulary matrix and
prints one row per (backend, workload). The compiled path avoids the per-query
temporary arrays the numpy path allocates; the batch path is BLAS-backed in
numpy and a tight loop in Cython, so relative speed depends on matrix size.
"""

import argparse
import time

import numpy as np

from privtext._kernels import nn_numpy

try:
    from privtext._kernels import _nncore
except ImportError:
    _nncore = None


def run(impl, matrix, queries, repeat=3):
    # single-query path
    best_single = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for q in queries[:50]:
            impl.nearest_index(matrix, q)
        best_single = min(best_single, (time.perf_counter() - start) / 50)
    # batch path
    best_batch = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        impl.nearest_index_batch(matrix, queries)
        best_batch = min(best_batch, (time.perf_counter() - start) / len(queries))
    return best_single, best_batch


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--vocab", type=int, default=50_000)
    parser.add_argument("--dim", type=int, default=300)
    parser.add_argument("--queries", type=int, default=500)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    matrix = np.ascontiguousarray(rng.standard_normal((args.vocab, args.dim)))
    queries = np.ascontiguousarray(rng.standard_normal((args.queries, args.dim)))

    backends = [("numpy", nn_numpy)]
    if _nncore is not None:
        backends.append(("cython", _nncore))
    else:
        print("compiled kernel not built; benchmarking numpy only")

    print(f"vocab={args.vocab} dim={args.dim} queries={args.queries}")
    print(f"{'backend':<8} {'single ms/query':>16} {'batch ms/query':>16}")
    results = {}
    for name, impl in backends:
        single, batch = run(impl, matrix, queries)
        results[name] = (single, batch)
        print(f"{name:<8} {single * 1e3:>16.3f} {batch * 1e3:>16.3f}")

    if len(results) == 2:
        agree = (
            nn_numpy.nearest_index_batch(matrix, queries[:100])
            == _nncore.nearest_index_batch(matrix, queries[:100])
        ).all()
        print(f"backends agree on {100} spot-check queries: {bool(agree)}")


if __name__ == "__main__":
    main()
