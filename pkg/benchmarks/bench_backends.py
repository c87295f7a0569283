#!/usr/bin/env python3
"""Timing comparison of the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_backends.py [--shots N]

Each kernel runs on identical inputs through both backends; outputs are
asserted equal before timing, so the table is also an equivalence check.
"""

import argparse
import time

import numpy as np

from scdec._kernels import _pykernels as pyk
from scdec.lattice import build_layout
from scdec.ped import decode_tables

try:
    from scdec._kernels import _cykernels as cyk
except ImportError:
    cyk = None


def timeit(fn, *args, reps=3):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def row(name, pyt, cyt):
    speedup = f"{pyt / cyt:6.1f}x" if cyt else "      -"
    cy = f"{cyt * 1e3:9.2f}" if cyt else "        -"
    print(f"{name:<28} {pyt * 1e3:9.2f} {cy} {speedup}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--shots", type=int, default=200_000)
    args = ap.parse_args()
    n = args.shots

    lay = build_layout(5)
    print(f"{'kernel':<28} {'numpy ms':>9} {'cython ms':>9} {'speedup':>7}")

    # sampling
    pyt, a = timeit(pyk.sample_pauli_bits, lay.n_data, 0.1, 42, 1, 0, n)
    cyt = None
    if cyk:
        cyt, b = timeit(cyk.sample_pauli_bits, lay.n_data, 0.1, 42, 1, 0, n)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    row(f"sample ({n} shots, d=5)", pyt, cyt)
    x, z = a

    # syndrome extraction
    pyt, sa = timeit(pyk.syndrome_bits, x, z, lay.hx, lay.hz)
    cyt = None
    if cyk:
        cyt, sb = timeit(cyk.syndrome_bits, x, z, lay.hx, lay.hz)
        assert np.array_equal(sa, sb)
    row("syndrome extraction", pyt, cyt)

    # pure-error decode (linear map)
    px, pz = decode_tables(5)
    pyt, da = timeit(pyk.gf2_matmul, sa, px)
    cyt = None
    if cyk:
        cyt, db = timeit(cyk.gf2_matmul, sa, px)
        assert np.array_equal(da, db)
    row("pure-error decode", pyt, cyt)

    # fixed-point inference, 16/4 net at 5 bits
    rng = np.random.default_rng(0)
    lim = 1 << 4
    w = [rng.integers(-lim, lim, size=s).astype(np.int64)
         for s in ((16, 24), 16, (4, 16), 4, (2, 4), 2)]
    pyt, fa = timeit(pyk.fixed_forward_bits, sa, *w, 4, 5, 0)
    cyt = None
    if cyk:
        cyt, fb = timeit(cyk.fixed_forward_bits, sa, *w, 4, 5, 0)
        assert np.array_equal(fa, fb)
    row("fixed-point NN forward", pyt, cyt)

    # defect matching DP (k = 12)
    k = 12
    d = rng.integers(1, 12, size=(k, k))
    d = (d + d.T).astype(np.int64)
    bnd = rng.integers(1, 12, size=k).astype(np.int64)
    reps = 200
    t0 = time.perf_counter()
    for _ in range(reps):
        pa = pyk.match_defects(d, bnd)
    pyt = (time.perf_counter() - t0) / reps
    cyt = None
    if cyk:
        t0 = time.perf_counter()
        for _ in range(reps):
            pb = cyk.match_defects(d, bnd)
        cyt = (time.perf_counter() - t0) / reps
        assert np.array_equal(pa, pb)
    row("defect matching (k=12)", pyt, cyt)

    if not cyk:
        print("\ncompiled backend not built; run `pip install -e .` with a "
              "C compiler to compare")


if __name__ == "__main__":
    main()
