"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--max-n 22]

Prints one line per (kernel, size, backend) with the best-of-repeat wall time
and the speedup of the compiled backend.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from smoothlab.kernels import available_backends


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def cases(max_n: int, rng: np.random.Generator):
    for n in (12, 16, 20, max_n):
        data = rng.random(1 << n)
        yield "wht_inplace", n, lambda mod, d=data: mod.wht_inplace(d.copy())
    for k in (12, 16, 20):
        gens = rng.integers(0, 1 << 24, size=k, dtype=np.uint64)
        yield "span_images", k, lambda mod, g=gens: mod.span_images(g)
    z = rng.integers(0, 1 << 24, size=1 << 20, dtype=np.uint64)
    rows = rng.integers(0, 1 << 24, size=12, dtype=np.uint64)
    yield "popcount", 20, lambda mod: mod.popcount(z)
    yield "parity_products", 20, lambda mod: mod.parity_products(z, rows)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--max-n", type=int, default=22)
    args = parser.parse_args()

    backends = available_backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'log2 size':>9} " + " ".join(f"{name:>10}" for name in sorted(backends)) + "   speedup")
    for name, size, fn in cases(args.max_n, rng):
        times = {b: best_time(lambda: fn(mod), args.repeat) for b, mod in sorted(backends.items())}
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        cols = " ".join(f"{times[b]:>9.4f}s" for b in sorted(times))
        print(f"{name:<16} {size:>9} {cols}   {speedup:6.2f}x")


if __name__ == "__main__":
    main()
