"""Smoothing checks and numerical verifiers for the bias/smoothing bounds.

Every verifier checks its own hypotheses and keeps "hypothesis violated"
separate from "bound violated". A bound violation under valid hypotheses is a
bug somewhere in the stack, never an expected outcome.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from smoothlab.gf2 import GF2Vector, LinearCode, dual_code
from smoothlab.spectral import (
    KrawtchoukBoundParams,
    Pmf,
    Spectrum,
    ball_volume,
    bias_of,
    convolve,
    fwht_forward,
    joint_pushforward,
    kbound_check,
    pushforward,
    tv_distance,
    tv_to_uniform,
    uniform_times_bernoulli,
    weights_table,
)

TOL = 1e-12
TIE_TOL = 1e-15  # biases this close count as tied for the witness choice

CERTIFICATE_COLUMNS = (
    "n", "k", "w", "d_dual", "t_dual", "eps", "C",
    "lhs", "rhs", "term1", "term2", "term3", "ok",
)


class IdentityViolation(AssertionError):
    """An exact identity failed beyond floating-point tolerance."""


@lru_cache(maxsize=32)
def _weights(n: int) -> np.ndarray:
    wt = weights_table(n)
    wt.setflags(write=False)
    return wt


@lru_cache(maxsize=256)
def _sphere(n: int, w: int) -> np.ndarray:
    idx = np.flatnonzero(_weights(n) == w)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=256)
def _kbound_ok(n: int, C: float, c: float) -> bool:
    return kbound_check(n, KrawtchoukBoundParams(C, c)).ok


def code_pmf(C: LinearCode) -> Pmf:
    """Uniform distribution on the codewords of C."""
    mass = np.zeros(1 << C.n)
    mass[C.codewords().astype(np.int64)] = 1.0 / C.size
    return Pmf(C.n, mass, allow_large=True)


@dataclass(frozen=True)
class SmoothingReport:
    n: int
    k: int
    tv_codeword: float
    tv_syndrome: float
    tv_message: float

    @property
    def residual(self) -> float:
        return abs(self.tv_codeword - self.tv_syndrome)


def smooths_check(C: LinearCode, P: Pmf) -> SmoothingReport:
    """Distance to uniformity of X_C + Z, H Z and G Z for Z ~ P.

    The first two are equal by an exact identity; a mismatch beyond 1e-12
    raises ``IdentityViolation``.
    """
    if P.n != C.n:
        raise ValueError(f"dimension mismatch: code n={C.n}, pmf n={P.n}")
    report = SmoothingReport(
        n=C.n,
        k=C.k,
        tv_codeword=tv_to_uniform(convolve(code_pmf(C), P)),
        tv_syndrome=tv_to_uniform(pushforward(C.parity, P)),
        tv_message=tv_to_uniform(pushforward(C.gen, P)),
    )
    if report.residual > TOL:
        raise IdentityViolation(
            f"codeword/syndrome distances differ by {report.residual:.3e} (n={C.n}, k={C.k})"
        )
    return report


def achievability_dist(n: int, gamma: float, *, allow_large: bool = False) -> Pmf:
    """(1 - gamma) * uniform + gamma * uniform on the weight-1 sphere."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma} outside [0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    mass = np.full(1 << n, (1.0 - gamma) / (1 << n))
    mass[[1 << i for i in range(n)]] += gamma / n
    return Pmf(n, mass, allow_large=allow_large)


@dataclass(frozen=True)
class AchievabilityResult:
    bias: float
    tv_joint: float
    bias_predicted: float
    tv_bound: float
    ok: bool
    hypotheses_ok: bool
    violations: tuple[str, ...] = ()


def verify_achievability(C: LinearCode, e: GF2Vector, gamma: float) -> AchievabilityResult:
    """Check the bias formula and joint-TV bound for ``achievability_dist``.

    Hypotheses (|C| < 2^(n-1)/V_n(2), e != 0, |e| < n/2, and e not a
    codeword so that (G, e) has full rank) are reported in ``violations``;
    the conclusions are evaluated regardless.
    """
    n = C.n
    if e.n != n:
        raise ValueError(f"dimension mismatch: e has length {e.n}, code n={n}")
    violations = []
    if not C.size * ball_volume(n, min(2, n)) < (1 << (n - 1)):
        violations.append("code_too_large")
    if e.bits == 0:
        violations.append("e_zero")
    if not 2 * e.weight < n:
        violations.append("e_too_heavy")
    if e.bits and C.contains(e):
        # e.Z is then a function of G Z and the joint distance is >= 1/2 for every pmf
        violations.append("e_in_code")

    P = achievability_dist(n, gamma)
    bias = bias_of(e, P)
    joint = joint_pushforward(C.gen, e, P)
    tv_joint = tv_distance(joint, uniform_times_bernoulli(C.k, 0.5 - bias))
    predicted = 0.5 * gamma * (1.0 - 2.0 * e.weight / n)
    bound = gamma * (1.5 - e.weight / n)
    ok = abs(bias - predicted) <= TOL and tv_joint <= bound + TOL
    return AchievabilityResult(bias, tv_joint, predicted, bound, ok, not violations, tuple(violations))


@dataclass(frozen=True)
class BoundCertificate:
    """One instance of an inequality lhs <= rhs, with the rhs broken into terms."""

    lhs: float
    rhs: float
    rhs_terms: dict[str, float]
    params: dict[str, float]
    witness_e: GF2Vector | None = None
    violations: tuple[str, ...] = ()
    extras: dict[str, float] = field(default_factory=dict)

    @property
    def hypotheses_ok(self) -> bool:
        return not self.violations

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + TOL

    @property
    def status(self) -> str:
        if not self.hypotheses_ok:
            return "hyp_fail"
        return "ok" if self.holds else "fail"

    def to_row(self) -> dict[str, object]:
        p = self.params
        terms = list(self.rhs_terms.values()) + [0.0] * (3 - len(self.rhs_terms))
        values = (
            p.get("n"), p.get("k"), p.get("w"), p.get("d_dual"), p.get("t_dual"),
            p.get("eps"), p.get("C"), self.lhs, self.rhs, *terms[:3], self.status,
        )
        return dict(zip(CERTIFICATE_COLUMNS, values))


@dataclass(frozen=True)
class FlatnessResult:
    low_tail: float
    high_tail: float
    bound: float
    ok: bool
    precondition_ok: bool
    eps_actual: float
    d: int
    t: int

    @property
    def status(self) -> str:
        if not self.precondition_ok:
            return "hyp_fail"
        return "ok" if self.ok else "fail"

    def to_certificate(self, C0: LinearCode, eps: float) -> BoundCertificate:
        ball_term = self.bound - eps
        return BoundCertificate(
            lhs=max(self.low_tail, self.high_tail),
            rhs=self.bound,
            rhs_terms={"ball": ball_term, "unused": 0.0, "eps": eps},
            params={"n": C0.n, "k": C0.k, "w": 0, "d_dual": self.d, "t_dual": self.t, "eps": eps, "C": 1.0},
            violations=() if self.precondition_ok else ("smoothing_precondition",),
        )


def verify_flatness(C0: LinearCode, rho: Pmf, eps: float) -> FlatnessResult:
    """Tail masses of rho near 0 and near the all-ones word versus their bound.

    With d the distance of C0 and t = floor((d - 1)/2), both tails must be at
    most |C0| V_n(t) / 2^n + eps whenever P_C0 * rho is eps-close to uniform.
    """
    n = C0.n
    if rho.n != n:
        raise ValueError(f"dimension mismatch: code n={n}, pmf n={rho.n}")
    eps_actual = tv_to_uniform(convolve(code_pmf(C0), rho))
    d = C0.min_dist
    t = min((d - 1) // 2, n)
    wt = _weights(n)
    low = float(rho.mass[wt <= t].sum())
    high = float(rho.mass[wt >= n - t].sum())
    bound = C0.size * ball_volume(n, t) / (1 << n) + eps
    ok = low <= bound + TOL and high <= bound + TOL
    return FlatnessResult(low, high, bound, ok, eps_actual <= eps + TOL, eps_actual, d, t)


def _krawtchouk_violations(n: int, w: int, params: KrawtchoukBoundParams) -> list[str]:
    out = []
    if not 0 <= w <= n:
        out.append("w_out_of_range")
    if w > params.c * n:
        out.append("w_above_cn")
    if not 0 < params.c < 0.5 or not _kbound_ok(n, params.C, params.c):
        out.append("kbound_not_certified")
    return out


def verify_dual_bound(
    C: LinearCode, rho: Pmf, w: int, eps: float, params: KrawtchoukBoundParams
) -> BoundCertificate:
    """Sphere average of 2^n rho_hat against the dual-ball/Krawtchouk/eps bound."""
    n = C.n
    if rho.n != n:
        raise ValueError(f"dimension mismatch: code n={n}, pmf n={rho.n}")
    dual = dual_code(C)
    d_dual = C.dual_min_dist
    t_dual = (d_dual - 1) // 2
    violations = _krawtchouk_violations(n, w, params)
    if not 2 * d_dual < n:
        violations.append("dual_distance_too_large")
    eps_actual = tv_to_uniform(convolve(code_pmf(dual), rho))
    if eps_actual > eps + TOL:
        violations.append("smoothing_precondition")

    lhs = 0.0
    if "w_out_of_range" not in violations:
        coef = fwht_forward(rho).coef
        lhs = float(coef[_sphere(n, w)].mean()) * (1 << n)
    terms = {
        "dual_ball": dual.size * ball_volume(n, t_dual) / (1 << (n - 1)),
        "krawtchouk": params.C * n * max(0.0, 1.0 - 2.0 * w / n) ** t_dual,
        "eps": 2.0 * eps,
    }
    return BoundCertificate(
        lhs=lhs,
        rhs=sum(terms.values()),
        rhs_terms=terms,
        params={"n": n, "k": C.k, "w": w, "d_dual": d_dual, "t_dual": t_dual, "eps": eps, "C": params.C},
        violations=tuple(violations),
        extras={"eps_actual": eps_actual},
    )


def sphere_biases(P: Pmf, w: int, spectrum: Spectrum | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Weight-w vectors (ascending encoding) and the bias of e.Z for each."""
    if not 0 <= w <= P.n:
        raise ValueError(f"w={w} outside [0, {P.n}]")
    if spectrum is None:
        spectrum = fwht_forward(P)
    sphere = _sphere(P.n, w)
    return sphere, spectrum.coef[sphere] * (1 << (P.n - 1))


def mean_magnitude(values: np.ndarray) -> float:
    """Mean of |values|, never below their minimum (summation roundoff can undershoot)."""
    mags = np.abs(values)
    return max(float(mags.mean()), float(mags.min()))


def average_bias(P: Pmf, w: int, spectrum: Spectrum | None = None) -> float:
    """Mean absolute bias of e.Z over all e of weight w."""
    if not 1 <= w <= P.n:
        raise ValueError(f"w={w} outside [1, {P.n}]")
    _, biases = sphere_biases(P, w, spectrum)
    return mean_magnitude(biases)


def theorem_bound(
    C: LinearCode, P: Pmf, w: int, eps: float, params: KrawtchoukBoundParams
) -> BoundCertificate:
    """Worst-case bias over the weight-w sphere against the three-term bound.

    The witness is the weight-w vector minimizing |2^n P_hat(x)|, ties (within
    1e-15) broken by the smallest integer encoding. ``extras`` carries the average bias
    (which obeys the same bound) and both sides of the self-smoothing chain
    tv(P_dual * P * P, U) <= tv(P_dual * P, U).
    """
    n = C.n
    if P.n != n:
        raise ValueError(f"dimension mismatch: code n={n}, pmf n={P.n}")
    violations = _krawtchouk_violations(n, w, params)
    eps_actual = tv_to_uniform(pushforward(C.gen, P))
    if eps_actual > eps + TOL:
        violations.append("smoothing_precondition")
    d_dual = C.dual_min_dist
    t_dual = (d_dual - 1) // 2

    spectrum = fwht_forward(P)
    witness, lhs, avg = None, 0.0, 0.0
    if "w_out_of_range" not in violations:
        sphere, biases = sphere_biases(P, w, spectrum)
        mags = np.abs(biases)
        j = int(np.flatnonzero(mags <= mags.min() + TIE_TOL)[0])
        witness = GF2Vector(int(sphere[j]), n)
        lhs = abs(float(biases[j]))
        avg = mean_magnitude(biases)

    dual_p = convolve(code_pmf(dual_code(C)), P)
    chain_once = tv_to_uniform(dual_p)
    chain_twice = tv_to_uniform(convolve(dual_p, P))
    terms = {
        "dual_ball": math.sqrt(2.0 ** (n - C.k) * ball_volume(n, t_dual) / 2.0 ** (n + 1)),
        "krawtchouk": 0.5 * math.sqrt(params.C * n) * max(0.0, 1.0 - 2.0 * w / n) ** (t_dual / 2),
        "eps": math.sqrt(eps / 2.0),
    }
    return BoundCertificate(
        lhs=lhs,
        rhs=sum(terms.values()),
        rhs_terms=terms,
        params={"n": n, "k": C.k, "w": w, "d_dual": d_dual, "t_dual": t_dual, "eps": eps, "C": params.C},
        witness_e=witness,
        violations=tuple(violations),
        extras={
            "avg_bias": avg,
            "eps_actual": eps_actual,
            "tv_dual_smoothed": chain_once,
            "tv_dual_self_smoothed": chain_twice,
        },
    )
