import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smoothlab.gf2 import GF2Matrix, GF2Vector
from smoothlab.spectral import (
    KrawtchoukBoundParams,
    Pmf,
    ball_volume,
    bernoulli_product,
    bias_of,
    convolve,
    delta,
    fwht_forward,
    fwht_inverse,
    joint_pushforward,
    kbound_check,
    kbound_fit,
    krawtchouk,
    krawtchouk_row,
    load_pmf,
    pushforward,
    save_pmf,
    tv_distance,
    tv_to_uniform,
    uniform,
    uniform_times_bernoulli,
    weights_table,
)
from oracles import (
    direct_bias,
    exact_dft,
    exact_pushforward,
    exact_tv,
    kbound_scan_oracle,
    naive_convolution,
    naive_dft,
    naive_pushforward,
    sphere_krawtchouk,
    tv,
)


def random_pmf(rng, n):
    return Pmf.from_weights(n, rng.random(1 << n) ** 3)


@st.composite
def pmfs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    w = draw(arrays(np.float64, 1 << n, elements=st.floats(0, 1)))
    w[draw(st.integers(0, (1 << n) - 1))] += 0.5
    return Pmf.from_weights(n, w)


def test_pmf_validation():
    with pytest.raises(ValueError):
        Pmf(2, [0.5, 0.5, 0.1, -0.1])
    with pytest.raises(ValueError):
        Pmf(2, [0.3, 0.3, 0.3, 0.3])
    with pytest.raises(ValueError):
        Pmf(2, [0.5, 0.5, 0.0])
    with pytest.raises(ValueError):
        Pmf(23, np.zeros(1))
    p = Pmf(2, [0.5, 0.5 + 1e-16, 0.0, -1e-16])
    assert p.mass.min() >= 0
    assert not p.mass.flags.writeable


def test_pmf_prob():
    p = bernoulli_product(3, 0.25)
    assert p.prob(weights_table(3) == 0) == pytest.approx(0.75**3)
    assert p.prob([0, 0, 7]) == pytest.approx(0.75**3 + 0.25**3)


@pytest.mark.parametrize("n", range(1, 11))
def test_forward_transform_matches_naive(n, rng):
    f = rng.random(1 << n)
    got = fwht_forward(f).coef
    want = naive_dft(f.tolist(), n) if n <= 8 else None
    if want is not None:
        np.testing.assert_allclose(got, want, atol=1e-12)
    np.testing.assert_allclose(fwht_inverse(fwht_forward(f)), f, atol=1e-12)


def test_transform_of_delta_and_uniform():
    n = 5
    np.testing.assert_allclose(fwht_forward(delta(n, 0)).coef, np.full(32, 1 / 32))
    u = fwht_forward(uniform(n)).coef
    assert u[0] == pytest.approx(1 / 32) and np.abs(u[1:]).max() < 1e-18


def test_exact_transform_spot_check():
    n = 4
    f = [Fraction(i + 1, 136) for i in range(16)]
    exact = exact_dft(f, n)
    got = fwht_forward(np.array([float(x) for x in f])).coef
    assert max(abs(Fraction(g) - e) for g, e in zip(got, exact)) < Fraction(1, 10**15)


@given(pmfs())
def test_parseval(P):
    coef = fwht_forward(P).coef
    assert np.sum(coef**2) * len(P) == pytest.approx(np.sum(P.mass**2), rel=1e-12)


@given(pmfs(max_n=6), st.integers(0, 10**6))
def test_convolution_theorem(P, seed):
    Q = random_pmf(np.random.default_rng(seed), P.n)
    conv = convolve(P, Q)
    np.testing.assert_allclose(conv.mass, naive_convolution(P.mass, Q.mass, P.n), atol=1e-13)
    lhs = fwht_forward(conv).coef
    rhs = (1 << P.n) * fwht_forward(P).coef * fwht_forward(Q).coef
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_convolution_dimension_mismatch():
    with pytest.raises(ValueError):
        convolve(uniform(3), uniform(4))


@given(pmfs(max_n=7), st.integers(0, 127))
def test_bias_identity(P, e_bits):
    e = GF2Vector(e_bits % (1 << P.n), P.n)
    assert bias_of(e, P) == pytest.approx(direct_bias(P.mass, e.bits), abs=1e-12)


@pytest.mark.parametrize("n", range(1, 12))
def test_krawtchouk_row_matches_sum(n):
    for w in range(n + 1):
        assert krawtchouk_row(n, w) == [krawtchouk(n, w, i) for i in range(n + 1)]


@pytest.mark.parametrize("n", range(1, 9))
def test_krawtchouk_sphere_sum(n):
    for w in range(n + 1):
        for i in range(n + 1):
            assert krawtchouk(n, w, i) == sphere_krawtchouk(n, w, i)


def test_krawtchouk_frozen_values():
    assert krawtchouk(4, 2, 1) == 0
    assert krawtchouk(4, 2, 2) == -2
    assert krawtchouk(4, 1, 3) == -2


@given(st.integers(1, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n))))
def test_krawtchouk_reflection(nwi):
    n, w, i = nwi
    assert krawtchouk(n, w, i) == (-1) ** w * krawtchouk(n, w, n - i)


@given(st.integers(1, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n))))
def test_krawtchouk_symmetry(nwi):
    n, w, i = nwi
    assert math.comb(n, i) * krawtchouk(n, w, i) == math.comb(n, w) * krawtchouk(n, i, w)


def test_krawtchouk_index_checks():
    with pytest.raises(ValueError):
        krawtchouk(5, 6, 0)
    with pytest.raises(ValueError):
        krawtchouk_row(5, -1)


def test_ball_volume():
    assert ball_volume(7, 1) == 8
    assert ball_volume(10, 10) == 1024
    assert ball_volume(5, 0) == 1


@pytest.mark.parametrize(
    "n, c, C",
    [(16, 0.16, Fraction(1)), (20, 0.16, Fraction(1)), (16, 0.3, Fraction(256, 65)), (12, 0.4, Fraction(243, 11))],
)
def test_kbound_worst_ratio_frozen(n, c, C):
    # constants computed with the sphere-sum oracle and frozen
    assert kbound_scan_oracle(n, c) == C
    res = kbound_check(n, KrawtchoukBoundParams(1.0, c))
    assert res.ok == (C <= 1)
    assert res.worst_ratio == pytest.approx(float(C), rel=1e-15)
    fit = kbound_fit(n, c)
    assert fit.C >= float(C) and fit.C - float(C) < 1e-6
    assert kbound_check(n, fit).ok
    assert fit.certified_n == n


def test_kbound_check_fails_below_worst():
    assert not kbound_check(16, KrawtchoukBoundParams(3.9, 0.3)).ok


def test_kbound_params_validation():
    with pytest.raises(ValueError):
        KrawtchoukBoundParams(0.5, 0.16)
    with pytest.raises(ValueError):
        KrawtchoukBoundParams(1.0, 1.2)
    with pytest.raises(ValueError):
        kbound_check(10, KrawtchoukBoundParams(1.0, 0.6))


@pytest.mark.parametrize("seed", range(10))
def test_pushforward_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, r = int(rng.integers(2, 9)), int(rng.integers(1, 6))
    dense = rng.integers(0, 2, size=(r, n))
    P = random_pmf(rng, n)
    got = pushforward(GF2Matrix.from_rows(dense.tolist()), P).mass
    np.testing.assert_allclose(got, naive_pushforward(dense.tolist(), P.mass, n), atol=1e-14)


def test_exact_pushforward_spot_check():
    n = 6
    rows = [0b101101, 0b011010, 0b110001]
    mass = [Fraction(1 + (i * 7) % 5, 1) for i in range(1 << n)]
    total = sum(mass)
    mass = [m / total for m in mass]
    P = Pmf(n, [float(m) for m in mass])
    got = pushforward(GF2Matrix(rows, n), P).mass
    exact = exact_pushforward(rows, mass, n)
    assert max(abs(Fraction(g) - e) for g, e in zip(got, exact)) < Fraction(1, 10**15)
    q = [Fraction(1, 8)] * 8
    assert abs(Fraction(tv_to_uniform(Pmf(3, got))) - exact_tv(exact, q)) < Fraction(1, 10**15)


def test_joint_pushforward_marginal(rng):
    n = 8
    P = random_pmf(rng, n)
    G = GF2Matrix(rng.integers(0, 1 << n, size=3, dtype=np.uint64), n)
    e = GF2Vector(0b1011, n)
    joint = joint_pushforward(G, e, P).mass.reshape(2, 8)
    np.testing.assert_allclose(joint.sum(axis=0), pushforward(G, P).mass, atol=1e-15)
    assert joint[1].sum() == pytest.approx(0.5 - bias_of(e, P), abs=1e-13)


@given(pmfs(max_n=6), st.integers(0, 10**6))
def test_tv_marginalization_and_data_processing(P, seed):
    rng = np.random.default_rng(seed)
    Q = random_pmf(rng, P.n)
    G = GF2Matrix(rng.integers(0, 1 << P.n, size=max(1, P.n - 1), dtype=np.uint64), P.n)
    assert tv_distance(pushforward(G, P), pushforward(G, Q)) <= tv_distance(P, Q) + 1e-12
    R = random_pmf(rng, P.n)
    assert tv_distance(convolve(P, R), convolve(Q, R)) <= tv_distance(P, Q) + 1e-12


@given(pmfs(max_n=6))
def test_tv_properties(P):
    assert 0.0 <= tv_to_uniform(P) <= 1.0
    assert tv_distance(P, P) == 0.0
    assert tv_to_uniform(P) == pytest.approx(tv(P.mass, np.full(len(P), 1 / len(P))), abs=1e-14)


def test_uniform_times_bernoulli_layout():
    m = uniform_times_bernoulli(2, 0.25).mass
    np.testing.assert_allclose(m, [0.1875] * 4 + [0.0625] * 4)


def test_pmf_csv_roundtrip(tmp_path, rng):
    P = random_pmf(rng, 5)
    save_pmf(P, tmp_path / "p.csv")
    assert np.array_equal(load_pmf(tmp_path / "p.csv").mass, P.mass)


def test_pmf_csv_bad_header(tmp_path):
    (tmp_path / "p.csv").write_text("i,m\n0,1\n")
    with pytest.raises(ValueError):
        load_pmf(tmp_path / "p.csv")
