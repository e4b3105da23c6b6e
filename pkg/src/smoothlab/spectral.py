"""Exact calculus of probability mass functions over F2^n.

Pmfs are dense float64 arrays of length 2^n indexed by the integer encoding of
x (bit i of the index is coordinate i). The Fourier transform is normalized
with 1/2^n on the forward side:

    f_hat(y) = 2^-n * sum_x f(x) (-1)^(x.y),    f(x) = sum_y f_hat(y) (-1)^(x.y)

so that (f * g)_hat = 2^n f_hat g_hat and the bias of e.Z equals
2^(n-1) P_hat(e).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from smoothlab import kernels
from smoothlab.gf2 import GF2Matrix, GF2Vector

DEFAULT_MAX_N = 22
HARD_MAX_N = 26
NEG_TOL = 1e-15
SUM_TOL = 1e-12
CSV_SUM_TOL = 1e-9


def _check_n(n: int, allow_large: bool) -> None:
    limit = HARD_MAX_N if allow_large else DEFAULT_MAX_N
    if not 0 <= n <= limit:
        hint = "" if allow_large or n > HARD_MAX_N else " (pass allow_large=True to go up to 26)"
        raise ValueError(f"n={n} outside [0, {limit}]{hint}")


def _log2_len(size: int) -> int:
    if size < 1 or size & (size - 1):
        raise ValueError(f"array length {size} is not a power of two")
    return size.bit_length() - 1


class Pmf:
    """Dense probability mass function on F2^n.

    Roundoff negativity down to -1e-15 is clamped to zero and the mass is
    renormalized; anything more negative, or a total off by more than 1e-12,
    is rejected.
    """

    __slots__ = ("n", "mass")

    def __init__(self, n: int, mass, *, allow_large: bool = False):
        _check_n(n, allow_large)
        arr = np.array(mass, dtype=np.float64)
        if arr.shape != (1 << n,):
            raise ValueError(f"mass has shape {arr.shape}, expected ({1 << n},)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("mass contains non-finite entries")
        low = float(arr.min())
        if low < -NEG_TOL:
            raise ValueError(f"negative mass {low:.3e} beyond roundoff tolerance")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"mass sums to {total!r}, not 1")
        if low < 0:
            np.maximum(arr, 0.0, out=arr)
            arr /= arr.sum()
        arr.setflags(write=False)
        self.n = n
        self.mass = arr

    @classmethod
    def from_weights(cls, n: int, weights, *, allow_large: bool = False) -> Pmf:
        w = np.asarray(weights, dtype=np.float64)
        return cls(n, w / w.sum(), allow_large=allow_large)

    def __len__(self) -> int:
        return self.mass.shape[0]

    def __repr__(self) -> str:
        return f"Pmf(n={self.n})"

    def prob(self, event) -> float:
        """P(A) for an event given as a boolean mask or an index array."""
        event = np.asarray(event)
        if event.dtype == bool:
            return float(self.mass[event].sum())
        return float(self.mass[np.unique(event)].sum())


def uniform(n: int, *, allow_large: bool = False) -> Pmf:
    return Pmf(n, np.full(1 << n, 1.0 / (1 << n)), allow_large=allow_large)


def delta(n: int, x: int = 0) -> Pmf:
    mass = np.zeros(1 << n)
    mass[x] = 1.0
    return Pmf(n, mass)


def weights_table(n: int) -> np.ndarray:
    """Hamming weight of every index 0..2^n - 1."""
    return kernels.popcount(np.arange(1 << n, dtype=np.uint64))


def bernoulli_product(n: int, p: float) -> Pmf:
    """Law of n i.i.d. Ber(p) coordinates."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    wt = weights_table(n)
    return Pmf(n, (p ** wt) * ((1.0 - p) ** (n - wt)))


def uniform_times_bernoulli(k: int, delta_: float) -> Pmf:
    """P_{U_k} x P_{Ber(delta)} on F2^(k+1); the Bernoulli bit is coordinate k."""
    if not 0.0 <= delta_ <= 1.0:
        raise ValueError(f"delta={delta_} outside [0, 1]")
    half = 1 << k
    mass = np.empty(2 * half)
    mass[:half] = (1.0 - delta_) / half
    mass[half:] = delta_ / half
    return Pmf(k + 1, mass)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients f_hat(y), forward-normalized by 1/2^n."""

    n: int
    coef: np.ndarray


@dataclass(frozen=True)
class KrawtchoukBoundParams:
    """Constants (C, c) for |K_w(i)| / binom(n, w) <= C (1 - 2w/n)^i.

    ``certified_n`` records the block length at which the pair was checked.
    """

    C: float
    c: float
    certified_n: int | None = None

    def __post_init__(self):
        if self.C < 1:
            raise ValueError(f"C={self.C} must be >= 1")
        if not 0 < self.c < 1:
            raise ValueError(f"c={self.c} must lie in (0, 1)")


def fwht_forward(f) -> Spectrum:
    """Fourier transform in O(n 2^n)."""
    values = f.mass if isinstance(f, Pmf) else np.asarray(f, dtype=np.float64)
    n = _log2_len(values.shape[0])
    coef = np.array(values, dtype=np.float64, copy=True)
    kernels.wht_inplace(coef)
    coef *= 1.0 / (1 << n)
    return Spectrum(n, coef)


def fwht_inverse(s: Spectrum) -> np.ndarray:
    if s.coef.shape != (1 << s.n,):
        raise ValueError("malformed spectrum")
    out = np.array(s.coef, dtype=np.float64, copy=True)
    kernels.wht_inplace(out)
    return out


def _same_n(a: Pmf, b: Pmf) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")


def convolve(f: Pmf, g: Pmf) -> Pmf:
    """(f * g)(x) = sum_y f(y) g(x + y), via the transform."""
    _same_n(f, g)
    fa = np.array(f.mass, copy=True)
    ga = np.array(g.mass, copy=True)
    kernels.wht_inplace(fa)
    kernels.wht_inplace(ga)
    fa *= ga
    kernels.wht_inplace(fa)
    fa *= 1.0 / (1 << f.n)
    return Pmf(f.n, fa, allow_large=True)


def tv_distance(P: Pmf, Q: Pmf) -> float:
    _same_n(P, Q)
    return 0.5 * float(np.abs(P.mass - Q.mass).sum())


def tv_to_uniform(P: Pmf) -> float:
    return 0.5 * float(np.abs(P.mass - 1.0 / len(P)).sum())


def _check_index(name: str, value: int, n: int) -> None:
    if not 0 <= value <= n:
        raise ValueError(f"{name}={value} outside [0, {n}]")


def krawtchouk(n: int, w: int, i: int) -> int:
    """K_w(i) = sum_j (-1)^j binom(i, j) binom(n - i, w - j), exactly."""
    _check_index("w", w, n)
    _check_index("i", i, n)
    return sum((-1) ** j * math.comb(i, j) * math.comb(n - i, w - j) for j in range(w + 1))


def krawtchouk_row(n: int, w: int) -> list[int]:
    """K_w(i) for i = 0..n, via the three-term recurrence in i.

    (n - i) K_w(i+1) = (n - 2w) K_w(i) - i K_w(i-1).
    """
    _check_index("w", w, n)
    row = [math.comb(n, w)]
    if n == 0:
        return row
    row.append(math.comb(n, w) * (n - 2 * w) // n)
    for i in range(1, n):
        num = (n - 2 * w) * row[i] - i * row[i - 1]
        row.append(num // (n - i))
    return row


def ball_volume(n: int, t: int) -> int:
    _check_index("t", t, n)
    return sum(math.comb(n, j) for j in range(t + 1))


@dataclass(frozen=True)
class KboundResult:
    ok: bool
    worst_ratio: float
    argmax: tuple[int, int]


def _kbound_ratios(n: int, c: float):
    """Yield (w, i, exact ratio) over 0 <= w <= c n, 0 <= i <= n/2."""
    w_max = math.floor(c * n)
    for w in range(w_max + 1):
        kw = krawtchouk_row(n, w)
        binom = math.comb(n, w)
        base = Fraction(n - 2 * w, n)
        power = Fraction(1)
        for i in range(n // 2 + 1):
            yield w, i, Fraction(abs(kw[i]), binom) / power
            power *= base


def kbound_check(n: int, params: KrawtchoukBoundParams) -> KboundResult:
    """Exact check of the Krawtchouk envelope over 0 <= w <= c n, 0 <= i <= n/2.

    The reported ratio is |K_w(i)| / (binom(n, w) (1 - 2w/n)^i); the check
    passes iff it never exceeds C. Comparisons are done in exact rationals.
    """
    if not 0 < params.c < 0.5:
        raise ValueError("c must lie in (0, 1/2) so that 1 - 2w/n stays positive")
    C = Fraction(params.C)
    worst, arg = Fraction(0), (0, 0)
    for w, i, ratio in _kbound_ratios(n, params.c):
        if ratio > worst:
            worst, arg = ratio, (w, i)
    return KboundResult(worst <= C, float(worst), arg)


def kbound_fit(n: int, c: float) -> KrawtchoukBoundParams:
    """Smallest C >= 1 on a 1e-6 grid for which ``kbound_check`` passes at n."""
    if not 0 < c < 0.5:
        raise ValueError(f"c={c} must lie in (0, 1/2)")
    worst = max(ratio for _, _, ratio in _kbound_ratios(n, c))
    steps = max(10**6, math.ceil(worst * 10**6))
    while Fraction(steps / 10**6) < worst:
        steps += 1
    params = KrawtchoukBoundParams(steps / 10**6, c, certified_n=n)
    assert kbound_check(n, params).ok
    return params


def bias_of(e: GF2Vector, P: Pmf, spectrum: Spectrum | None = None) -> float:
    """bias(e.Z) = 2^(n-1) P_hat(e) for Z ~ P.

    Pass a precomputed ``spectrum`` of P to avoid recomputing the transform.
    """
    if e.n != P.n:
        raise ValueError(f"dimension mismatch: e has length {e.n}, pmf n={P.n}")
    if spectrum is None:
        spectrum = fwht_forward(P)
    return float(spectrum.coef[e.bits]) * (1 << (P.n - 1))


def linear_images(M: GF2Matrix) -> np.ndarray:
    """M z for every z in F2^cols, as packed integers indexed by z."""
    return kernels.span_images(M.column_words())


def pushforward(M: GF2Matrix, P: Pmf) -> Pmf:
    """Exact law of M Z for Z ~ P, summing mass over preimages."""
    if M.cols != P.n:
        raise ValueError(f"dimension mismatch: matrix has {M.cols} columns, pmf n={P.n}")
    images = linear_images(M).astype(np.int64)
    out = np.bincount(images, weights=P.mass, minlength=1 << M.rows)
    return Pmf(M.rows, out, allow_large=True)


def joint_pushforward(G: GF2Matrix, e: GF2Vector, P: Pmf) -> Pmf:
    """Law of (G Z, e.Z); the parity bit is coordinate k of the result."""
    if e.n != G.cols:
        raise ValueError(f"dimension mismatch: e has length {e.n}, G has {G.cols} columns")
    return pushforward(G.vstack(GF2Matrix([e.bits], e.n)), P)


def save_pmf(P: Pmf, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "mass"])
        for i, m in enumerate(P.mass):
            writer.writerow([i, repr(float(m))])


def load_pmf(path: str | Path) -> Pmf:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "mass"]:
            raise ValueError(f"bad pmf header {header!r}, expected index,mass")
        rows = [(int(i), float(m)) for i, m in reader]
    n = _log2_len(len(rows))
    mass = np.zeros(1 << n)
    seen = np.zeros(1 << n, dtype=bool)
    for i, m in rows:
        if not 0 <= i < (1 << n) or seen[i]:
            raise ValueError(f"bad or duplicate index {i}")
        seen[i] = True
        mass[i] = m
    if abs(mass.sum() - 1.0) > CSV_SUM_TOL:
        raise ValueError(f"pmf mass sums to {mass.sum()!r}")
    return Pmf.from_weights(n, mass, allow_large=True)
