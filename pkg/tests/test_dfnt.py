import cmath
import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import crandn
from oracles import circular_convolution, dense_dft
from ocdm.dfnt import (
    ORACLE_LIMIT,
    circular_convolve,
    dfnt,
    dfnt_matrix,
    eigencheck,
    idfnt,
    make_plan,
)


def test_plan_even_theta2_n2():
    plan = make_plan(2)
    np.testing.assert_allclose(plan.theta2, [1, cmath.exp(1j * math.pi / 2)], atol=1e-15)
    assert plan.parity == "even"


def test_plan_gamma_n4():
    plan = make_plan(4)
    expected = [cmath.exp(-1j * math.pi * k * k / 4) for k in range(4)]
    np.testing.assert_allclose(plan.gamma, expected, atol=1e-14)
    # written out: 1, e^{-j pi/4}, e^{-j pi}, e^{-j 9pi/4}
    np.testing.assert_allclose(
        plan.gamma,
        [1, cmath.exp(-1j * math.pi / 4), cmath.exp(-1j * math.pi), cmath.exp(-9j * math.pi / 4)],
        atol=1e-14,
    )


def test_plan_odd_gamma():
    plan = make_plan(3)
    assert plan.parity == "odd"
    assert plan.gamma[1] == 1
    assert plan.gamma[0] == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7, 64, 1023, 1024])
def test_plan_invariants(n):
    plan = make_plan(n)
    for v in (plan.theta1, plan.theta2, plan.gamma):
        assert np.abs(np.abs(v) - 1).max() < 1e-12
        assert not v.flags.writeable
    assert plan.gamma[0] == 1
    assert plan.parity == ("even" if n % 2 == 0 else "odd")


@pytest.mark.parametrize("bad", [0, -3])
def test_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        make_plan(bad)
    with pytest.raises(ValueError):
        dfnt_matrix(bad)


def test_matrix_n1_and_n2():
    np.testing.assert_allclose(dfnt_matrix(1), [[1]], atol=1e-15)
    phi = dfnt_matrix(2)
    assert abs(phi[0, 0] - cmath.exp(-1j * math.pi / 4) / math.sqrt(2)) < 1e-15
    assert abs(phi[0, 1] - cmath.exp(1j * math.pi / 4) / math.sqrt(2)) < 1e-15


def test_matrix_is_circulant():
    for n in (6, 7):
        phi = dfnt_matrix(n)
        for m in range(n):
            np.testing.assert_allclose(np.roll(phi[:, 0], m), phi[:, m], atol=1e-12)


@pytest.mark.parametrize("n", list(range(1, 17)) + [64, 256, 1024])
def test_unitarity(n):
    phi = dfnt_matrix(n)
    assert np.abs(phi.conj().T @ phi - np.eye(n)).max() < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8, 9, 16, 64, 1024])
def test_fast_path_matches_matrix(n, rng):
    plan = make_plan(n)
    phi = dfnt_matrix(n)
    x = crandn(rng, n)
    assert np.abs(dfnt(plan, x) - phi @ x).max() < 1e-9
    assert np.abs(idfnt(plan, x) - phi.conj().T @ x).max() < 1e-9


def test_size_one_is_identity():
    plan = make_plan(1)
    assert dfnt(plan, [2 - 3j])[0] == pytest.approx(2 - 3j, abs=1e-15)


def test_impulse_response_is_column(rng):
    plan = make_plan(4)
    e0 = np.array([1, 0, 0, 0], dtype=complex)
    np.testing.assert_allclose(idfnt(plan, e0), dfnt_matrix(4).conj().T[:, 0], atol=1e-14)


def test_idfnt_n256_against_dense(rng):
    plan = make_plan(256)
    x = crandn(rng, 256)
    assert np.abs(idfnt(plan, x) - dfnt_matrix(256).conj().T @ x).max() < 1e-9


def test_batched_rows(rng):
    plan = make_plan(12)
    x = crandn(rng, 3, 12)
    out = dfnt(plan, x)
    for row, xr in zip(out, x):
        np.testing.assert_allclose(row, dfnt(plan, xr), atol=1e-14)


def test_size_mismatch():
    with pytest.raises(ValueError):
        dfnt(make_plan(4), np.zeros(5))
    with pytest.raises(ValueError):
        idfnt(make_plan(4), np.zeros(3))


@given(st.integers(1, 300), st.integers(0, 2**32 - 1))
def test_round_trip(n, seed):
    r = np.random.default_rng(seed)
    plan = make_plan(n)
    x = crandn(r, n)
    assert np.abs(dfnt(plan, idfnt(plan, x)) - x).max() < 1e-10
    assert np.abs(idfnt(plan, dfnt(plan, x)) - x).max() < 1e-10


@pytest.mark.parametrize("n", [4, 5, 7, 8, 33, 64])
def test_circular_convolution_identity(n, rng):
    plan = make_plan(n)
    for _ in range(5):
        h, s = crandn(rng, n), crandn(rng, n)
        lhs = dfnt(plan, circular_convolution(h, s))
        assert np.abs(lhs - circular_convolution(h, dfnt(plan, s))).max() < 1e-9
        assert np.abs(lhs - circular_convolution(s, dfnt(plan, h))).max() < 1e-9


def test_fft_convolution_helper_matches_direct(rng):
    h, s = crandn(rng, 9), crandn(rng, 9)
    np.testing.assert_allclose(circular_convolve(h, s), circular_convolution(h, s), atol=1e-12)


@pytest.mark.parametrize("n,tol", [(4, 1e-10), (5, 1e-10), (64, 1e-9), (1, 1e-12), (2, 1e-12), (9, 1e-10), (255, 1e-9)])
def test_eigencheck(n, tol):
    assert eigencheck(make_plan(n)) < tol


def test_eigencheck_with_independent_dft():
    # same check, DFT built entrywise rather than through numpy.fft
    for n in (6, 7):
        f = dense_dft(n)
        d = f @ dfnt_matrix(n) @ f.conj().T
        assert np.abs(d - np.diag(make_plan(n).gamma)).max() < 1e-12


def test_positive_kernel_fails_for_odd():
    # opposite sign convention diagonalizes but gives conjugate-reversed eigenvalues
    n = 5
    f = dense_dft(n).conj()
    d = f @ dfnt_matrix(n) @ f.conj().T
    assert np.abs(np.diag(d) - make_plan(n).gamma).max() > 0.1


def test_eigencheck_limit():
    with pytest.raises(ValueError):
        eigencheck(make_plan(ORACLE_LIMIT + 1))


def _best_time(plan, x, reps=200, rounds=7):
    best = math.inf
    for _ in range(rounds):
        t0 = time.perf_counter()
        for _ in range(reps):
            dfnt(plan, x)
        best = min(best, time.perf_counter() - t0)
    return best


def test_scaling_is_subquadratic(rng):
    p1, p2 = make_plan(1024), make_plan(2048)
    x1, x2 = crandn(rng, 1024), crandn(rng, 2048)
    _best_time(p1, x1, 20, 1)
    ratio = _best_time(p2, x2) / _best_time(p1, x1)
    assert ratio < 2.5
