import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wslip import poly

degrees = st.integers(2, 12)
times = st.floats(0.0, 2.0)


def test_basis_row_trivial():
    assert np.array_equal(poly.basis_row(0.0, 5, 0), [1, 0, 0, 0, 0, 0])
    assert np.array_equal(poly.basis_row(1.0, 3, 1), [0, 1, 2, 3])
    assert np.array_equal(poly.basis_row(2.0, 3, 2), [0, 0, 2, 12])


def test_basis_row_errors():
    with pytest.raises(ValueError):
        poly.basis_row(0.5, 5, 3)
    with pytest.raises(ValueError):
        poly.basis_row(0.5, 1, 0)


@given(times, degrees, st.integers(0, 1))
def test_basis_row_derivative_matches_finite_difference(t, N, k):
    h = 1e-6
    fd = (poly.basis_row(t + h, N, k) - poly.basis_row(t - h, N, k)) / (2 * h)
    exact = poly.basis_row(t, N, k + 1)
    scale = 1.0 + np.abs(poly.basis_row(t, N, k)).max()
    assert np.allclose(fd, exact, atol=1e-6 * scale * (1 + t) ** N, rtol=1e-6)


def test_basis_matrix_and_block():
    Phi = poly.basis_matrix(0.3, 4)
    assert Phi.shape == (3, 5)
    B = poly.block_basis(0.3, 4)
    assert B.shape == (6, 10)
    assert np.array_equal(B[:3, :5], Phi) and np.array_equal(B[3:, 5:], Phi)
    assert not B[:3, 5:].any() and not B[3:, :5].any()


@given(st.lists(times, min_size=1, max_size=5), degrees, st.integers(0, 2))
def test_vectorised_rows(ts, N, k):
    V = poly.basis_rows(ts, N, k)
    for i, t in enumerate(ts):
        assert np.allclose(V[i], poly.basis_row(t, N, k))


@given(st.integers(2, 9), st.floats(0.1, 2.0), st.integers(0, 2))
def test_gram_matrix_matches_quadrature(N, T, k):
    x, w = np.polynomial.legendre.leggauss(N + 2)
    ts, ws = 0.5 * T * (x + 1), 0.5 * T * w
    V = poly.basis_rows(ts, N, k, scale=T)
    assert np.allclose(poly.gram_matrix(N, T, k, scale=T), V.T @ (ws[:, None] * V), rtol=1e-10, atol=1e-12)


def test_eval_trivial():
    c = np.zeros(6)
    c[0] = 2.5
    v, d, a = poly.PolyTraj(c, 1.0).eval(0.7)
    assert (v[0], d[0], a[0]) == (2.5, 0.0, 0.0)
    c = np.zeros(6)
    c[1] = 1.0
    v, d, a = poly.PolyTraj(c, 1.0).eval(0.7)
    assert (v[0], d[0], a[0]) == (0.7, 1.0, 0.0)
    c = np.arange(1.0, 7.0)
    v, d, a = poly.PolyTraj(c, 1.0).eval(0.0)
    assert (v[0], d[0], a[0]) == (1.0, 2.0, 6.0)


def test_eval_outside_horizon():
    tr = poly.PolyTraj(np.ones(4), 0.5)
    with pytest.raises(poly.HorizonError):
        tr.eval(0.6)
    with pytest.raises(poly.HorizonError):
        tr.sample([-0.1, 0.2])


def test_trajectory_is_immutable():
    tr = poly.PolyTraj(np.ones((2, 4)), 1.0)
    assert tr.channels == 2 and tr.degree == 3
    with pytest.raises(ValueError):
        tr.coeffs[0, 0] = 3.0


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=10), st.floats(0.2, 2.0),
       st.sampled_from([1.0, None]))
def test_rate_is_value_derivative(c, T, scale):
    tr = poly.PolyTraj(c, T, T if scale is None else scale)
    h = 1e-6
    for t in np.linspace(h, T - h, 7):
        v0 = tr.eval(t - h)[0][0]
        v1 = tr.eval(t + h)[0][0]
        v, d, _ = tr.eval(t)
        assert abs(d[0] - (v1 - v0) / (2 * h)) <= 1e-6 * (1 + abs(v[0])) * max(1, abs(np.array(c)).max())


def test_monomial_coeffs_of_scaled_basis():
    tr = poly.PolyTraj([1.0, 2.0, 3.0], 2.0, scale=2.0)
    assert np.allclose(tr.monomial_coeffs(), [[1.0, 1.0, 0.75]])
    assert np.allclose(tr.monomial_coeffs(1), [[1.0, 1.5]])


@given(st.integers(2, 9), st.sampled_from([1.0, 0.4]))
def test_fit_recovers_polynomial(N, T):
    rng = np.random.default_rng(N)
    c = rng.normal(size=N + 1)
    ts = np.linspace(0, T, poly.FIT_SAMPLES)
    vals = poly.basis_rows(ts, N, 0, scale=T) @ c
    fit = poly.fit_least_squares(ts, vals, N, T, scale=T)
    assert np.allclose(fit.coeffs[0], c, rtol=1e-8, atol=1e-8 * np.abs(c).max())
    again = poly.fit_least_squares(ts, fit.sample(ts)[:, 0], N, T, scale=T)
    assert np.allclose(again.coeffs, fit.coeffs, rtol=1e-9, atol=1e-10)


def test_fit_errors():
    with pytest.raises(poly.FitError):
        poly.fit_least_squares(np.linspace(0, 1, 5), np.zeros(5), N=9)
    with pytest.raises(poly.FitError):
        poly.fit_least_squares(np.r_[np.zeros(2), np.linspace(0, 1, 10)], np.zeros(12), N=9)


def test_fit_sine_residual():
    ts = np.linspace(0, 1, poly.FIT_SAMPLES)
    fit = poly.fit_least_squares(ts, np.sin(ts), 9)
    dense = np.linspace(0, 1, 2001)
    assert np.max(np.abs(fit.sample(dense)[:, 0] - np.sin(dense))) < 1e-7


def test_fit_with_endpoint_constraints():
    ts = np.linspace(0, 1, 101)
    vals = np.column_stack([np.cos(3 * ts), ts ** 2])
    cons = [(0.0, 0, [1.0, 0.0]), (0.0, 1, 0.0), (1.0, 0, [math.cos(3.0), 1.0])]
    fit = poly.fit_least_squares(ts, vals, 5, constraints=cons)
    v0, d0, _ = fit.eval(0.0)
    v1, _, _ = fit.eval(1.0)
    assert np.allclose(v0, [1, 0], atol=1e-12) and np.allclose(d0, 0, atol=1e-12)
    assert np.allclose(v1, [math.cos(3.0), 1.0], atol=1e-12)
    assert np.max(np.abs(fit.sample(ts) - vals)) < 1e-2


def test_weighted_gram():
    G = poly.weighted_gram(4, 0.5, (1.0, 0.0, 2.0))
    assert np.allclose(G, poly.gram_matrix(4, 0.5, 0) + 2 * poly.gram_matrix(4, 0.5, 2))
