"""Compare the jitted kernels against the plain-Python fallback.

Run twice to see both paths end to end:

    python benchmarks/bench_kernels.py                  # numba (default)
    HOMEDRIFT_NO_NUMBA=1 python benchmarks/bench_kernels.py

This script times the dispatched functions AND the raw fallback in one
process, so a single run already prints the speedup table.
"""

import time

import numpy as np

from homedrift import kernels
from homedrift.kernels import _impl


def bench(label, fn, *args, repeat=20):
    fn(*args)  # warm-up / jit compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    print(f"{label:<28s} {best * 1e3:9.3f} ms")
    return best


def main():
    rng = np.random.default_rng(1)
    print(f"dispatch: {'numba' if kernels.USING_NUMBA else 'python fallback'}\n")

    ts = np.sort(rng.uniform(0, 86400, 2000))
    vals = rng.normal(20, 3, 2000)
    a = bench("trailing_median (dispatch)", kernels.trailing_median, ts, vals, 7200.0)
    b = bench("trailing_median (fallback)", _impl.trailing_median, ts, vals, 7200.0)
    print(f"{'':28s} speedup x{b / a:,.1f}\n")

    m = rng.random((5, 5))
    np.fill_diagonal(m, 0)
    m /= m.sum(axis=1, keepdims=True)
    cum = np.cumsum(m, axis=1)
    u = rng.random(200_000)
    a = bench("markov_walk (dispatch)", kernels.markov_walk, cum, 0, u)
    b = bench("markov_walk (fallback)", _impl.markov_walk, cum, 0, u)
    print(f"{'':28s} speedup x{b / a:,.1f}\n")

    counts = rng.poisson(4.0, 5000).astype(float)
    counts[2500:] += 5
    prefix = np.concatenate(([0.0], np.cumsum(counts)))
    a = bench("binseg_best_split (dispatch)", kernels.binseg_best_split, prefix, 0, 5000)
    b = bench("binseg_best_split (fallback)", _impl.binseg_best_split, prefix, 0, 5000)
    print(f"{'':28s} speedup x{b / a:,.1f}\n")

    rel = np.arange(-600.0, 86400.0, 1.0)
    a = bench("cooking_contribution (disp.)", kernels.cooking_contribution, rel, 1800.0, 8.0, 1200.0)
    b = bench("cooking_contribution (fallb.)", _impl.cooking_contribution, rel, 1800.0, 8.0, 1200.0)
    print(f"{'':28s} speedup x{b / a:,.1f}")


if __name__ == "__main__":
    main()
