#!/usr/bin/env python3
"""Benchmark the compiled core against the NumPy fallback.

Times the two quadratic hot paths on identical inputs for each available
backend: building the pairwise-distance matrices and evaluating the MMD
statistic for a batch of permutations from one precomputed gram matrix.
The end-to-end fused test is timed as well.

Usage:
    python benchmarks/compare_backends.py [--sizes 250,500,1000] [--b 500]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import mmdfuse.backends as backends
from mmdfuse.experiments import measure_runtime
from mmdfuse.synthetic import sample_shifted_gaussian


def best_of(fn, repeats: int = 3) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_primitives(n: int, dim: int, b: int, repeats: int):
    x = sample_shifted_gaussian(2 * n, dim, 0.0, 1.0, seed=n)
    rng = np.random.default_rng(n)
    perms = np.vstack([rng.permutation(2 * n) for _ in range(b + 1)]).astype(np.int64)
    xidx = np.ascontiguousarray(perms[:, :n])

    rows = {}
    for name in backends.available_backends():
        impl = backends.get_backend(name)
        t_dist = best_of(lambda: (impl.sq_l2_distances(x), impl.l1_distances(x)), repeats)
        gram = np.exp(-impl.sq_l2_distances(x) / 2.0)
        t_batch = best_of(lambda: impl.batch_mmd(gram, xidx, n, n), repeats)
        rows[name] = (t_dist, t_batch)
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="250,500,1000")
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--b", type=int, default=500)
    parser.add_argument("--kernels", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    names = backends.available_backends()
    print(f"available backends: {', '.join(names)}")
    print()
    print(f"{'n':>6}  {'op':<12}" + "".join(f"{name:>12}" for name in names))
    for n in sizes:
        rows = bench_primitives(n, args.dim, args.b, args.repeats)
        for idx, op in enumerate(("distances", f"batch x{args.b + 1}")):
            cells = "".join(f"{rows[name][idx]:>11.4f}s" for name in names)
            print(f"{n:>6}  {op:<12}{cells}")

    print()
    print(f"end-to-end fused test (kernels={args.kernels}, b={args.b}):")
    previous = backends.active_backend().name
    try:
        for name in names:
            backends.set_backend(name)
            cells = [
                f"n={n}: {measure_runtime(n, args.dim, args.kernels, args.b, seed=1, repeats=args.repeats):.3f}s"
                for n in sizes
            ]
            print(f"  {name:<8} " + "  ".join(cells))
    finally:
        backends.set_backend(previous)


if __name__ == "__main__":
    main()
