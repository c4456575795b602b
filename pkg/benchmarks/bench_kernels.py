"""Benchmark: compiled telegraph kernel vs the pure-Python fallback.

The asymmetric two-state Markov chain is the one sequential hot loop in
the toolkit (state i+1 depends on state i, so numpy cannot vectorize
it). This script times both backends on the same pre-drawn uniforms,
checks the outputs are bit-identical, and prints the speedup.

Usage: python benchmarks/bench_kernels.py [--n 2000000] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qfluct import _kernels_py

try:
    from qfluct import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2_000_000,
                        help="chain length (default 2e6)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions, best-of (default 5)")
    args = parser.parse_args()

    rng = np.random.default_rng(12345)
    u = rng.random(args.n)
    # asymmetric probabilities: forces the sequential path in both backends
    p_lh, p_hl = 0.002, 0.011

    ref = _kernels_py.telegraph_states(u, p_lh, p_hl, 0)
    t_py = _time(lambda: _kernels_py.telegraph_states(u, p_lh, p_hl, 0),
                 args.repeats)
    rate_py = args.n / t_py / 1e6
    print(f"python   backend: {t_py * 1e3:8.2f} ms  ({rate_py:7.2f} Msteps/s)")

    if _kernels is None:
        print("compiled backend: not built (pip install -e . to build it)")
        return 0

    out = _kernels.telegraph_states(u, p_lh, p_hl, 0)
    if not np.array_equal(ref, out):
        raise AssertionError("backends disagree: outputs are not bit-identical")
    t_c = _time(lambda: _kernels.telegraph_states(u, p_lh, p_hl, 0),
                args.repeats)
    rate_c = args.n / t_c / 1e6
    print(f"compiled backend: {t_c * 1e3:8.2f} ms  ({rate_c:7.2f} Msteps/s)")
    print(f"outputs bit-identical over {args.n} steps")
    print(f"speedup: {t_py / t_c:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
