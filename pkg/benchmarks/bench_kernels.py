"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

The first numba call compiles (or loads the on-disk cache); it is excluded
from the timings.
"""

import argparse
import timeit

import numpy as np

from shallowd.kernels import HAVE_NUMBA, jit_impl, numpy_impl


def cases(rng):
    emit = rng.normal(size=(12, 3))
    trans = rng.normal(size=(3, 3))
    start, end = rng.normal(size=3), rng.normal(size=3)
    q = rng.normal(size=(121, 300))
    filters = rng.normal(size=(128, 4, 300))
    argmax = rng.integers(0, 118, size=128)
    gpre = rng.normal(size=128)
    idx = rng.integers(0, 5000, size=50 * 121)
    rows = rng.normal(size=(len(idx), 300))
    table = np.zeros((5000, 300))
    return {
        "crf_forward (T=12, K=3)": lambda k: k.crf_forward(emit, trans, start, end),
        "crf_backward (T=12, K=3)": lambda k: k.crf_backward(emit, trans, end),
        "crf_viterbi (T=12, K=3)": lambda k: k.crf_viterbi(emit, trans, start, end),
        "pool_backward (l=121, d=300, n_f=128, w=4)": lambda k: k.pool_backward(
            q, filters, argmax, gpre, np.zeros_like(filters), np.zeros_like(q)),
        "scatter_add_rows (6050 rows, d=300)": lambda k: k.scatter_add_rows(table, idx, rows),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy kernels exist")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<46}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for name, call in cases(rng).items():
        call(jit_impl)  # warm up / compile
        t_np = min(timeit.repeat(lambda: call(numpy_impl), number=args.repeat, repeat=3)) / args.repeat
        t_jit = min(timeit.repeat(lambda: call(jit_impl), number=args.repeat, repeat=3)) / args.repeat
        print(f"{name:<46}{t_np * 1e6:>12.1f}{t_jit * 1e6:>12.1f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
