"""Random instance generation for the bound-verification suites."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from smoothlab.gf2 import LinearCode, dual_code, random_linear_code
from smoothlab.smoothing import (
    BoundCertificate,
    achievability_dist,
    code_pmf,
    theorem_bound,
    verify_dual_bound,
    verify_flatness,
)
from smoothlab.spectral import (
    KrawtchoukBoundParams,
    Pmf,
    bernoulli_product,
    convolve,
    kbound_fit,
    pushforward,
    tv_to_uniform,
    weights_table,
)

PMF_FAMILIES = ("bernoulli", "achievability", "sparse", "dirichlet", "low_weight")
DEFAULT_C_GRID = (0.16, 0.25, 0.35)
_CODE_RETRIES = 200


def random_pmf(rng: np.random.Generator, n: int, family: str | None = None) -> Pmf:
    """Draw a pmf from one of a few families that concentrate near low weight.

    Diffuse pmfs smooth every code and make the bounds vacuous, so most
    families put their mass on few or light vectors.
    """
    family = family or PMF_FAMILIES[int(rng.integers(len(PMF_FAMILIES)))]
    size = 1 << n
    if family == "bernoulli":
        return bernoulli_product(n, float(rng.uniform(0.01, 0.5)))
    if family == "achievability":
        return achievability_dist(n, float(rng.uniform(0.0, 1.0)))
    if family == "sparse":
        support = rng.choice(size, size=int(rng.integers(1, 2 * n + 1)), replace=False)
        mass = np.zeros(size)
        mass[support] = rng.dirichlet(np.ones(support.size))
        return Pmf.from_weights(n, mass)
    if family == "dirichlet":
        return Pmf.from_weights(n, rng.dirichlet(np.full(size, 0.1)))
    if family == "low_weight":
        radius = int(rng.integers(1, 3))
        mass = np.where(weights_table(n) <= radius, rng.random(size), 0.0)
        return Pmf.from_weights(n, mass)
    raise ValueError(f"unknown pmf family {family!r}")


@lru_cache(maxsize=None)
def fitted_params(n: int, c: float) -> KrawtchoukBoundParams:
    return kbound_fit(n, c)


@dataclass(frozen=True)
class BoundInstance:
    index: int
    code: LinearCode
    pmf: Pmf
    w: int
    params: KrawtchoukBoundParams


def _code_with_small_dual_distance(n: int, rng: np.random.Generator) -> LinearCode:
    for _ in range(_CODE_RETRIES):
        k = int(rng.integers(2, n - 1))
        code = random_linear_code(n, k, rng)
        if 2 * code.dual_min_dist < n:
            return code
    raise RuntimeError(f"no code with dual distance < n/2 at n={n}")


def draw_instance(
    seed: int,
    index: int,
    n_range: tuple[int, int] = (8, 14),
    c_grid: tuple[float, ...] = DEFAULT_C_GRID,
    w: int | None = None,
) -> BoundInstance:
    """Instance ``index`` of the suite seeded by ``seed``; valid hypotheses unless ``w`` is forced."""
    rng = np.random.default_rng([seed, index])
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    code = _code_with_small_dual_distance(n, rng)
    c = float(c_grid[int(rng.integers(len(c_grid)))])
    params = fitted_params(n, c)
    if w is None:
        w = int(rng.integers(1, math.floor(c * n) + 1))
    return BoundInstance(index, code, random_pmf(rng, n), w, params)


def certify(inst: BoundInstance) -> dict[str, BoundCertificate]:
    """Certificates for every check on one instance, keyed by check name.

    Each epsilon is the exact distance for the instance, so the smoothing
    preconditions hold by construction.
    """
    C, P, w, params = inst.code, inst.pmf, inst.w, inst.params
    eps_flat = tv_to_uniform(convolve(code_pmf(C), P))
    flat = verify_flatness(C, P, eps_flat).to_certificate(C, eps_flat)

    rho = convolve(P, P)
    eps_dual = tv_to_uniform(convolve(code_pmf(dual_code(C)), rho))
    dual = verify_dual_bound(C, rho, w, eps_dual, params)

    eps_msg = tv_to_uniform(pushforward(C.gen, P))
    thm = theorem_bound(C, P, w, eps_msg, params)

    avg = BoundCertificate(
        lhs=thm.extras["avg_bias"], rhs=thm.rhs, rhs_terms=thm.rhs_terms,
        params=thm.params, violations=thm.violations,
    )
    chain = BoundCertificate(
        lhs=thm.extras["tv_dual_self_smoothed"],
        rhs=thm.extras["tv_dual_smoothed"],
        rhs_terms={"tv_dual_smoothed": thm.extras["tv_dual_smoothed"], "unused": 0.0, "eps": eps_msg},
        params=thm.params,
    )
    return {"flatness": flat, "dual_bound": dual, "theorem": thm, "average_bias": avg, "chain": chain}
