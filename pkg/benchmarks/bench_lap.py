#!/usr/bin/env python3
"""Benchmark the assignment backends (compiled kernel vs NumPy fallback).

Runs both implementations on identical random instances, checks they agree
on the optimal cost and produce dual-feasible potentials, and prints timing
per size.  scipy.optimize.linear_sum_assignment is included as an external
reference when available.

    python3 benchmarks/bench_lap.py [--sizes 64,128,256,512] [--repeats 3]
"""

import argparse
import time

import numpy as np

from gotlab import lap_numpy

try:
    from gotlab import _lapjv
except ImportError:
    _lapjv = None

try:
    from scipy.optimize import linear_sum_assignment
except ImportError:
    linear_sum_assignment = None


def _check(cost, col, u, v, total):
    n = cost.shape[0]
    assert sorted(col.tolist()) == list(range(n)), "not a permutation"
    assert abs(cost[np.arange(n), col].sum() - total) <= 1e-8 * max(1.0, abs(total))
    red = cost - u[:, None] - v[None, :]
    assert red.min() >= -1e-7, f"duals infeasible: min reduced cost {red.min():.2e}"
    assert np.abs(red[np.arange(n), col]).max() <= 1e-7, "complementary slackness"


def bench(sizes, repeats):
    rng = np.random.default_rng(12345)
    print(f"{'n':>6} {'numpy (s)':>12} {'c (s)':>12} {'speedup':>9} {'scipy (s)':>12}")
    for n in sizes:
        costs = [rng.random((n, n)) for _ in range(repeats)]
        # squared-distance-like structure in one instance for realism
        pts_a = rng.normal(size=(n, 2))
        pts_b = rng.normal(size=(n, 2))
        diff = pts_a[:, None, :] - pts_b[None, :, :]
        costs.append((diff**2).sum(axis=2))

        t_np = t_c = t_sp = 0.0
        for C in costs:
            t0 = time.perf_counter()
            col, u, v, total_np = lap_numpy.solve_lap(C)
            t_np += time.perf_counter() - t0
            _check(C, col, u, v, total_np)

            if _lapjv is not None:
                t0 = time.perf_counter()
                col, u, v, total_c = _lapjv.solve_lap(C)
                t_c += time.perf_counter() - t0
                _check(C, col, u, v, total_c)
                assert abs(total_np - total_c) <= 1e-8 * max(1.0, abs(total_np)), (
                    f"backends disagree at n={n}: {total_np} vs {total_c}"
                )

            if linear_sum_assignment is not None:
                t0 = time.perf_counter()
                ri, ci = linear_sum_assignment(C)
                t_sp += time.perf_counter() - t0
                total_sp = C[ri, ci].sum()
                assert abs(total_np - total_sp) <= 1e-8 * max(1.0, abs(total_np)), (
                    f"scipy disagrees at n={n}: {total_np} vs {total_sp}"
                )

        m = len(costs)
        speed = (t_np / t_c) if t_c > 0 else float("nan")
        sp = f"{t_sp / m:12.4f}" if linear_sum_assignment is not None else "         n/a"
        cc = f"{t_c / m:12.4f}" if _lapjv is not None else "         n/a"
        print(f"{n:>6} {t_np / m:12.4f} {cc} {speed:9.1f}x {sp}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="64,128,256,512")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    if _lapjv is None:
        print("note: compiled kernel unavailable; timing NumPy fallback only")
    bench(sizes, args.repeats)
    print("all backends agreed on optimal costs and dual feasibility")


if __name__ == "__main__":
    main()
