"""Timing comparison of the numba-jitted kernels against the numpy fallbacks.

Run as a script:

    python benchmarks/bench_kernels.py [trials]

The jitted path is whatever `ffgscon._kernels` selected at import; when the
process runs with FFGSCON_PURE_NUMPY=1 (or without numba) both columns show
the fallback and the ratio is ~1.
"""

import sys
import time

import numpy as np

from ffgscon import _kernels as K


def timeit(fn, *args, repeats=3):
    fn(*args)  # warm-up (includes jit compilation on the fast path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(trials: int = 2_000_000) -> None:
    idx = np.arange(trials, dtype=np.uint64)
    probs = np.array([0.5, 0.25, 0.7])
    cdf12 = np.cumsum(np.full(12, 1 / 12))
    valid = np.array([True] * 9 + [False] * 3)
    lab_cdf = np.cumsum([0.1, 0.4, 0.25, 0.25])
    table = np.random.default_rng(1).uniform(size=(4, 3))

    cases = [
        ("uniforms", (11, 2, idx, 5), K.uniforms, K.NUMPY_IMPLS["uniforms"]),
        ("tally_bernoulli", (9, 1, idx, 0, 0.37), K.tally_bernoulli, K.NUMPY_IMPLS["tally_bernoulli"]),
        ("tally_chain", (9, 3, idx, 0, probs), K.tally_chain, K.NUMPY_IMPLS["tally_chain"]),
        ("tally_unique", (4, 2, idx, 0, cdf12, cdf12, 4, valid), K.tally_unique, K.NUMPY_IMPLS["tally_unique"]),
        ("tally_boundary", (8, 6, idx, 0, lab_cdf, 2, 0.4), K.tally_boundary, K.NUMPY_IMPLS["tally_boundary"]),
        ("tally_low", (8, 8, idx, 0, lab_cdf, table), K.tally_low, K.NUMPY_IMPLS["tally_low"]),
        ("select", (1, 0, idx, 0, lab_cdf), K.select, K.NUMPY_IMPLS["select"]),
    ]

    mode = "numba" if K.USE_NUMBA else "numpy (fallback selected)"
    print(f"trials = {trials:,}   fast path = {mode}")
    print(f"{'kernel':16s} {'fast [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, args, fast, ref in cases:
        t_fast = timeit(fast, *args)
        t_ref = timeit(ref, *args)
        print(f"{name:16s} {t_fast:10.4f} {t_ref:10.4f} {t_ref / t_fast:8.2f}x")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 2_000_000)
