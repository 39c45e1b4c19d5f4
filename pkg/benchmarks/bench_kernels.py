#!/usr/bin/env python3
"""Time the compiled kernels against the NumPy fallback.

Every kernel shared by the two backends is run at a range of sizes; the two
implementations are first cross-checked on identical inputs, then timed with
a best-of-three repeat loop sized to a per-cell time budget.  Elementwise
kernels must agree exactly; reduction outputs are compared at 1e-12 relative
(the two backends may sum in different orders).

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 1000,1000000 --budget 0.1
"""

import argparse
import math
import sys
import time

import numpy as np

from sgsn import _kernels_py

try:
    from sgsn import _kernels
except ImportError:
    _kernels = None

KERNELS = ("threshold_prox", "indicator_prox", "pg_step", "min_ratio_step",
           "soft_threshold", "shrink_quad_value", "shrink_jac_diag",
           "setdist_sq_threshold", "xoshiro_fill")


def make_inputs(name, m, rng):
    theta, lam, tau = 0.5, 0.3, 0.01
    stride = max(1, m // 64)
    if name in ("threshold_prox", "indicator_prox"):
        u = rng.normal(size=m)
        u[::stride] = theta  # exercise the exact-tie path
        return (u, theta)
    if name == "pg_step":
        return (np.abs(rng.normal(size=m)), rng.normal(size=m), tau, theta * tau)
    if name == "min_ratio_step":
        return (0.5 + rng.random(m), rng.normal(size=m))
    if name in ("soft_threshold", "shrink_quad_value", "shrink_jac_diag"):
        v = rng.normal(size=m)
        v[::stride] = lam  # dead-zone boundary entries
        return (v, lam)
    if name == "setdist_sq_threshold":
        u = rng.normal(size=m)
        u[::stride] = theta
        return (np.abs(rng.normal(size=m)), u, theta)
    if name == "xoshiro_fill":
        state = rng.integers(1, 2 ** 63, size=4, dtype=np.uint64)
        return (state, np.empty(m, dtype=np.uint64))
    raise KeyError(name)


def outputs_agree(name, got, want):
    if name == "pg_step":
        rel = abs(got[2] - want[2]) / max(1.0, abs(want[2]))
        return (np.array_equal(got[0], want[0]) and np.array_equal(got[1], want[1])
                and rel < 1e-12)
    if name in ("shrink_quad_value", "setdist_sq_threshold"):
        return abs(got - want) / max(1.0, abs(want)) < 1e-12
    if name == "min_ratio_step":
        return got == want
    if name in ("threshold_prox", "indicator_prox"):
        return np.array_equal(got[0], want[0]) and np.array_equal(got[1], want[1])
    return np.array_equal(got, want)


def check_agreement(name, m, seed):
    rng_c, rng_p = np.random.default_rng(seed), np.random.default_rng(seed)
    args_c = make_inputs(name, m, rng_c)
    args_p = make_inputs(name, m, rng_p)
    if name == "xoshiro_fill":
        _kernels.xoshiro_fill(*args_c)
        _kernels_py.xoshiro_fill(*args_p)
        return np.array_equal(args_c[0], args_p[0]) and np.array_equal(args_c[1], args_p[1])
    return outputs_agree(name, getattr(_kernels, name)(*args_c),
                         getattr(_kernels_py, name)(*args_p))


def per_call_seconds(fn, args, budget):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    fn(*args)
    once = time.perf_counter() - t0
    reps = max(1, min(10_000, int(budget / max(once, 1e-9))))
    best = math.inf
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def fmt_time(seconds):
    if seconds < 1e-6:
        return f"{seconds * 1e9:8.1f} ns"
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    if seconds < 1.0:
        return f"{seconds * 1e3:8.2f} ms"
    return f"{seconds:8.2f} s "


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,10000,100000,1000000",
                        help="comma-separated vector lengths")
    parser.add_argument("--budget", type=float, default=0.05,
                        help="target seconds per timed cell")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",") if s]

    if _kernels is None:
        print("compiled extension not importable; timing the NumPy fallback only",
              file=sys.stderr)

    header = f"{'kernel':<22}{'size':>9}  {'compiled':>11}  {'python':>11}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    speedups = []
    for name in KERNELS:
        for m in sizes:
            if _kernels is not None and not check_agreement(name, m, args.seed):
                print(f"{name:<22}{m:>9}  BACKEND MISMATCH", file=sys.stderr)
                return 1
            rng = np.random.default_rng(args.seed)
            inputs = make_inputs(name, m, rng)
            t_py = per_call_seconds(getattr(_kernels_py, name), inputs, args.budget)
            if _kernels is None:
                print(f"{name:<22}{m:>9}  {'-':>11}  {fmt_time(t_py)}  {'-':>8}")
                continue
            t_c = per_call_seconds(getattr(_kernels, name), inputs, args.budget)
            speedups.append(t_py / t_c)
            print(f"{name:<22}{m:>9}  {fmt_time(t_c)}  {fmt_time(t_py)}  "
                  f"{t_py / t_c:>7.2f}x")
    if speedups:
        geo = math.exp(sum(math.log(s) for s in speedups) / len(speedups))
        print(f"\ngeometric-mean speedup over {len(speedups)} cells: {geo:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
