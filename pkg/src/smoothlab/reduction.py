"""End-to-end worst-case decoding to LPN reduction with exact epsilon accounting.

The harness plants the error vector e so that the distance between the law of
(G Z, e.Z) and U_k x Ber(delta) can be computed exactly. The solver path never
sees e.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from smoothlab import kernels
from smoothlab.gf2 import CapExceeded, GF2Matrix, GF2Vector, LinearCode
from smoothlab.lpn import MAX_SOLVER_K, Seed, estimate_alpha, solve_ml_arrays
from smoothlab.spectral import (
    Pmf,
    bias_of,
    joint_pushforward,
    linear_images,
    pushforward,
    tv_distance,
    tv_to_uniform,
    uniform_times_bernoulli,
)
from smoothlab.smoothing import achievability_dist

BIAS_FLOOR = 1e-12

REPORT_COLUMNS = (
    "n", "k", "w", "N", "gamma", "delta", "eps_exact", "bias", "alpha_hat",
    "guarantee", "success_rate", "meaningful_syndrome", "meaningful_bias", "timestamp",
)


@dataclass(frozen=True)
class WdpInstance:
    code: LinearCode
    y: GF2Vector
    w: int
    planted_m: GF2Vector | None = None
    planted_e: GF2Vector | None = None

    def residual_weight(self, m: GF2Vector | int) -> int:
        """|y + G^T m|."""
        bits = m.bits if isinstance(m, GF2Vector) else int(m)
        return (self.y.bits ^ self.code.gen.combination(bits)).bit_count()

    def is_solution(self, m: GF2Vector | int) -> bool:
        return self.residual_weight(m) == self.w


def gen_wdp(C: LinearCode, w: int, seed: Seed) -> WdpInstance:
    if not 0 <= w <= C.n:
        raise ValueError(f"w={w} outside [0, {C.n}]")
    if C.k < 1:
        raise ValueError("the code must have dimension at least 1")
    rng = np.random.default_rng(seed)
    m = int(rng.integers(0, 1 << C.k, dtype=np.uint64))
    support = rng.choice(C.n, size=w, replace=False)
    e = sum(1 << int(j) for j in support)
    y = C.gen.combination(m) ^ e
    return WdpInstance(C, GF2Vector(y, C.n), w, GF2Vector(m, C.k), GF2Vector(e, C.n))


class PmfSampler:
    """Inverse-CDF sampling from a dense pmf (cumulative table + binary search)."""

    def __init__(self, P: Pmf):
        self.n = P.n
        self.cdf = np.cumsum(P.mass)
        self.cdf.setflags(write=False)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size) * self.cdf[-1]
        idx = np.searchsorted(self.cdf, u, side="right")
        return np.minimum(idx, self.cdf.shape[0] - 1).astype(np.uint64)


class LpnSamples(NamedTuple):
    m_prime: int
    z: np.ndarray
    a: np.ndarray
    t: np.ndarray


def build_lpn_samples(inst: WdpInstance, sampler: PmfSampler, N: int, rng: np.random.Generator) -> LpnSamples:
    """Randomize the message, draw Z_1..Z_N and form (G Z_i, Z_i.(y + G^T m'))."""
    C = inst.code
    m_prime = int(rng.integers(0, 1 << C.k, dtype=np.uint64))
    z = sampler.draw(rng, N)
    a = kernels.parity_products(z, C.gen.words)
    shifted = np.uint64(inst.y.bits ^ C.gen.combination(m_prime))
    t = (kernels.popcount(z & shifted) & 1).astype(np.uint8)
    return LpnSamples(m_prime, z, a, t)


def reduce_once(
    inst: WdpInstance, P: Pmf, N: int, seed: Seed, sampler: PmfSampler | None = None
) -> tuple[GF2Vector, bool]:
    """One run of the reduction; returns the candidate message and whether it solves the instance."""
    C = inst.code
    if P.n != C.n:
        raise ValueError(f"dimension mismatch: code n={C.n}, pmf n={P.n}")
    if N < 1:
        raise ValueError("N must be at least 1")
    if C.k > MAX_SOLVER_K:
        raise CapExceeded(f"k={C.k} exceeds the solver cap {MAX_SOLVER_K}")
    sampler = sampler or PmfSampler(P)
    rng = np.random.default_rng(seed)
    samples = build_lpn_samples(inst, sampler, N, rng)
    m_hat = solve_ml_arrays(samples.a, samples.t, C.k) ^ samples.m_prime
    return GF2Vector(m_hat, C.k), inst.is_solution(m_hat)


def product_achiever(G: GF2Matrix, e: GF2Vector, delta: float) -> Pmf:
    """A pmf whose (G Z, e.Z) law is exactly U_k x Ber(delta).

    Mass is spread uniformly over each fiber of z -> (G z, e.z); requires e
    outside the row space of G so that the stacked map is onto.
    """
    stacked = G.vstack(GF2Matrix([e.bits], e.n))
    if stacked.rank() != G.rows + 1:
        raise ValueError("e lies in the row space of G; (G Z, e.Z) cannot be a product law")
    target = uniform_times_bernoulli(G.rows, delta)
    images = linear_images(stacked).astype(np.int64)
    fiber = 1 << (G.cols - G.rows - 1)
    return Pmf(G.cols, target.mass[images] / fiber, allow_large=True)


@dataclass(frozen=True)
class ReductionReport:
    n: int
    k: int
    w: int
    N: int
    gamma: float
    delta: float
    eps_exact: float
    bias: float
    alpha_hat: float
    guarantee: float
    success_rate: float
    meaningful_syndrome: bool
    meaningful_bias: bool
    tv_message: float
    sigma: float
    trials: int
    alpha_trials: int

    @property
    def no_guarantee(self) -> bool:
        """True when the union bound promises nothing beyond guessing.

        That is the case when N eps >= alpha, or when e.Z carries no bias at
        all (delta = 1/2), where alpha is just the guessing probability.
        """
        return self.bias <= BIAS_FLOOR or self.N * self.eps_exact >= self.alpha_hat

    @property
    def guarantee_ok(self) -> bool:
        return self.success_rate >= self.guarantee - 3.0 * self.sigma

    def to_row(self, timestamp: str = "") -> dict[str, object]:
        values = [getattr(self, c) for c in REPORT_COLUMNS[:-1]] + [timestamp]
        return dict(zip(REPORT_COLUMNS, values))


def _child_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def run_experiment(
    C: LinearCode,
    w: int,
    gamma: float,
    N: int,
    trials: int,
    seed: int,
    *,
    alpha_trials: int | None = None,
    bias_threshold: tuple[float, float] = (1.0, 1.0),
    pmf: Pmf | None = None,
) -> ReductionReport:
    """Run ``trials`` reductions on one planted instance and do the epsilon accounting.

    ``pmf`` replaces ``achievability_dist(n, gamma)`` as the sampling law.
    ``bias_threshold = (l, const)`` flags the bias as meaningful when it is at
    least const * k^-l. The Monte-Carlo sigma combines the binomial errors of
    the success-rate and alpha estimates.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    alpha_trials = trials if alpha_trials is None else alpha_trials
    wdp_seed, alpha_seed, trial_seed = _child_seeds(seed, 3)

    P = achievability_dist(C.n, gamma) if pmf is None else pmf
    inst = gen_wdp(C, w, wdp_seed)
    e = inst.planted_e
    bias = bias_of(e, P)
    delta = 0.5 - bias
    eps_exact = tv_distance(joint_pushforward(C.gen, e, P), uniform_times_bernoulli(C.k, delta))
    tv_message = tv_to_uniform(pushforward(C.gen, P))

    stats = estimate_alpha(C.k, delta, N, alpha_trials, alpha_seed)
    sampler = PmfSampler(P)
    successes = sum(reduce_once(inst, P, N, [trial_seed, t], sampler)[1] for t in range(trials))
    success_rate = successes / trials

    alpha = stats.alpha_hat
    sigma = math.sqrt(alpha * (1 - alpha) / alpha_trials + success_rate * (1 - success_rate) / trials)
    l, const = bias_threshold
    return ReductionReport(
        n=C.n,
        k=C.k,
        w=w,
        N=N,
        gamma=gamma,
        delta=delta,
        eps_exact=eps_exact,
        bias=bias,
        alpha_hat=alpha,
        guarantee=alpha - N * eps_exact,
        success_rate=success_rate,
        meaningful_syndrome=tv_message < alpha / N,
        meaningful_bias=bias >= const * C.k ** (-l),
        tv_message=tv_message,
        sigma=sigma,
        trials=trials,
        alpha_trials=alpha_trials,
    )
