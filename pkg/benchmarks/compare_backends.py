#!/usr/bin/env python3
"""Time the numba-jitted hot kernels against the pure numpy/scipy fallback.

Both backends are importable side by side, so the comparison runs in one
process regardless of the TLRGEO_DISABLE_NUMBA setting.  Reported per
problem size: covariance assembly (exact and profile-table paths) and
one full likelihood iteration.

Usage: python benchmarks/compare_backends.py [--sizes 400,900,1600]
"""

import argparse
import time

import numpy as np

import tlrgeo
from tlrgeo import MaternParams, generate_locations
from tlrgeo import _numpy_blocks
from tlrgeo.kernels import build_profile, matern_block


def time_call(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def assembly_timings(n, theta):
    locs = generate_locations(n, 42)
    rows = locs.kernel_view(0, n)
    prof = build_profile(theta, *locs.distance_range())
    out = {}
    if tlrgeo.USING_NUMBA:
        matern_block(rows, rows, theta, None)  # jit warmup
        out["numba exact"] = time_call(lambda: matern_block(rows, rows, theta, None))
        out["numba profile"] = time_call(lambda: matern_block(rows, rows, theta, prof))
    out["numpy exact"] = time_call(
        lambda: _numpy_blocks.matern_block(rows, rows, theta, None))
    out["numpy profile"] = time_call(
        lambda: _numpy_blocks.matern_block(rows, rows, theta, prof))
    a = matern_block(rows, rows, theta, prof)
    b = _numpy_blocks.matern_block(rows, rows, theta, prof)
    out["max |numba - numpy|"] = float(np.max(np.abs(a - b)))
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="400,900,1600")
    args = parser.parse_args()
    theta = MaternParams(1.0, 0.1, 0.5)
    print(f"active backend: {'numba' if tlrgeo.USING_NUMBA else 'numpy'}")
    for n in (int(s) for s in args.sizes.split(",")):
        print(f"\nn = {n} (full {n}x{n} kernel block)")
        for name, val in assembly_timings(n, theta).items():
            if name.endswith(("exact", "profile")):
                print(f"  {name:16s} {val * 1000:9.1f} ms")
            else:
                print(f"  {name}: {val:.3e}")


if __name__ == "__main__":
    main()
