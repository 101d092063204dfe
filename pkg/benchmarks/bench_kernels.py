#!/usr/bin/env python3
"""Compare the compiled and pure-numpy spin-sampling backends.

Usage: python3 benchmarks/bench_kernels.py [--batch 1024] [--units 512]
"""

import argparse
import time

import numpy as np

from spinrbm import kernels


def bench(fn, phi, u, repeats=50):
    fn(phi, u)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(phi, u)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--batch", type=int, default=1024)
    parser.add_argument("--units", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    phi = rng.normal(0, 1, (args.batch, args.units))
    u = rng.random((args.batch, args.units))

    t_py = bench(kernels.draw_spins_python, phi, u, args.repeats)
    print(f"numpy backend   : {t_py * 1e3:8.3f} ms / call")
    if kernels.BACKEND == "cython":
        t_cy = bench(kernels.draw_spins, phi, u, args.repeats)
        print(f"cython backend  : {t_cy * 1e3:8.3f} ms / call")
        print(f"speedup         : {t_py / t_cy:8.2f}x")
        same = np.array_equal(kernels.draw_spins(phi, u),
                              np.atleast_2d(kernels.draw_spins_python(phi, u)))
        print(f"outputs agree   : {same}")
    else:
        print("compiled backend not built; only the numpy path was timed")


if __name__ == "__main__":
    main()
