"""LPN instances and an exhaustive maximum-likelihood solver."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from smoothlab import kernels
from smoothlab.gf2 import CapExceeded, GF2Vector

MAX_SOLVER_K = 20

Seed = int | Sequence[int]


@dataclass(frozen=True, eq=False)
class LpnInstance:
    """Samples (a_i, b_i) with b_i = a_i.m + Ber(delta).

    ``a`` holds packed k-bit vectors (uint64), ``b`` the bits (uint8).
    """

    k: int
    delta: float
    a: np.ndarray
    b: np.ndarray
    secret: GF2Vector | None = None
    seed: Seed | None = None

    def __post_init__(self):
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("a and b must be 1-d arrays of equal length")
        if self.a.size and int(self.a.max()) >> self.k:
            raise ValueError(f"sample vectors do not fit in k={self.k} bits")

    @property
    def N(self) -> int:
        return int(self.a.shape[0])

    def samples(self) -> list[tuple[GF2Vector, int]]:
        return [(GF2Vector(int(a), self.k), int(b)) for a, b in zip(self.a, self.b)]


def gen_lpn(k: int, delta: float, N: int, seed: Seed) -> LpnInstance:
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta={delta} outside [0, 1/2]")
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 1 <= k <= 63:
        raise ValueError(f"k={k} outside [1, 63]")
    rng = np.random.default_rng(seed)
    m = int(rng.integers(0, 1 << k, dtype=np.uint64))
    a = rng.integers(0, 1 << k, size=N, dtype=np.uint64)
    noise = (rng.random(N) < delta).astype(np.uint8)
    clean = (kernels.popcount(a & np.uint64(m)) & 1).astype(np.uint8)
    return LpnInstance(k, delta, a, clean ^ noise, GF2Vector(m, k), seed)


def ml_scores(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """Number of samples with a_i.m == b_i, for every candidate m."""
    if k > MAX_SOLVER_K:
        raise CapExceeded(f"exhaustive ML over 2^{k} secrets exceeds the cap 2^{MAX_SOLVER_K}")
    signs = 1.0 - 2.0 * b.astype(np.float64)
    table = np.bincount(a.astype(np.int64), weights=signs, minlength=1 << k)
    kernels.wht_inplace(table)
    return ((a.shape[0] + table) / 2).round().astype(np.int64)


def solve_ml_arrays(a: np.ndarray, b: np.ndarray, k: int) -> int:
    """Maximum-likelihood secret as an integer; ties go to the smallest encoding."""
    return int(np.argmax(ml_scores(a, b, k)))


def solve_ml(inst: LpnInstance) -> GF2Vector:
    return GF2Vector(solve_ml_arrays(inst.a, inst.b, inst.k), inst.k)


@dataclass(frozen=True)
class SolverStats:
    trials: int
    successes: int

    @property
    def alpha_hat(self) -> float:
        return self.successes / self.trials

    @property
    def ci_halfwidth(self) -> float:
        p = self.alpha_hat
        return 1.96 * math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def sigma(self) -> float:
        p = self.alpha_hat
        return math.sqrt(p * (1.0 - p) / self.trials)


def estimate_alpha(k: int, delta: float, N: int, trials: int, seed: int) -> SolverStats:
    """Monte-Carlo success rate of ``solve_ml``; trial t uses the stream (seed, t)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if k > MAX_SOLVER_K:
        raise CapExceeded(f"k={k} exceeds the solver cap {MAX_SOLVER_K}")
    successes = 0
    for t in range(trials):
        inst = gen_lpn(k, delta, N, seed=[seed, t])
        if solve_ml_arrays(inst.a, inst.b, k) == inst.secret.bits:
            successes += 1
    return SolverStats(trials, successes)


def save_lpn(inst: LpnInstance, path: str | Path) -> None:
    """CSV with a '# k=..,delta=..,seed=..' header line, then 'a_bits,b' rows."""
    seed = inst.seed if inst.seed is None or isinstance(inst.seed, int) else "/".join(map(str, inst.seed))
    with open(path, "w", newline="") as fh:
        fh.write(f"# k={inst.k},delta={inst.delta!r},seed={seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a_bits", "b"])
        for a, b in zip(inst.a, inst.b):
            writer.writerow([str(GF2Vector(int(a), inst.k)), int(b)])


def load_lpn(path: str | Path) -> LpnInstance:
    with open(path, newline="") as fh:
        meta_line = fh.readline().strip()
        if not meta_line.startswith("#"):
            raise ValueError("missing '# k=...,delta=...,seed=...' header")
        meta = dict(item.split("=", 1) for item in meta_line[1:].strip().split(","))
        k, delta = int(meta["k"]), float(meta["delta"])
        reader = csv.reader(fh)
        if next(reader, None) != ["a_bits", "b"]:
            raise ValueError("bad column header, expected a_bits,b")
        a, b = [], []
        for bits, bit in reader:
            if len(bits) != k:
                raise ValueError(f"sample {bits!r} is not {k} bits long")
            a.append(GF2Vector.from_bits(bits).bits)
            b.append(int(bit))
    seed = meta.get("seed")
    seed = None if seed in (None, "None") else [int(s) for s in seed.split("/")] if "/" in seed else int(seed)
    return LpnInstance(k, delta, np.array(a, dtype=np.uint64), np.array(b, dtype=np.uint8), None, seed)
