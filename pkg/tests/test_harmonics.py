import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_legendre, gammaln, lpmv

from axisym.geom import central_angle_deg
from axisym.harmonics import (
    basis_size, basis_slices, build_spline_table, legendre_assoc, legendre_norm,
    legendre_norm_all, mean_design, mean_design_row, mean_terms, norm_factor, real_basis,
)


def pbar_scipy(n, m, x):
    # scipy includes the Condon-Shortley phase (-1)^m
    c = np.sqrt((2 * n + 1) / 2 * np.exp(gammaln(n - m + 1) - gammaln(n + m + 1)))
    return (-1) ** m * c * lpmv(m, n, x)


X = np.linspace(-1, 1, 401)


@pytest.mark.parametrize("n", range(13))
def test_unnormalized_matches_scipy(n):
    for m in range(n + 1):
        np.testing.assert_allclose(legendre_assoc(n, m, X), (-1) ** m * lpmv(m, n, X),
                                   rtol=1e-12, atol=1e-12 * math.factorial(n + m))


def test_normalized_matches_scipy():
    P = legendre_norm_all(12, X)
    for n in range(13):
        for m in range(n + 1):
            np.testing.assert_allclose(P[n, m], pbar_scipy(n, m, X), atol=1e-12)
            assert legendre_norm(n, m, 0.3) == pytest.approx(pbar_scipy(n, m, 0.3), abs=1e-13)
        assert np.all(P[n, n + 1:] == 0)


def test_norm_factor_consistent():
    for n in range(10):
        for m in range(n + 1):
            np.testing.assert_allclose(norm_factor(n, m) * legendre_assoc(n, m, X),
                                       legendre_norm(n, m, X), atol=1e-12)


def test_orthonormality_by_quadrature():
    x, w = np.polynomial.legendre.leggauss(40)
    P = legendre_norm_all(7, x)
    for m in range(8):
        G = np.einsum("ak,bk,k->ab", P[m:, m], P[m:, m], w)
        np.testing.assert_allclose(G, np.eye(8 - m), atol=1e-12)


def test_bounded_by_sup_norm():
    x = np.linspace(-1, 1, 20001)
    P = legendre_norm_all(12, x)
    for n in range(13):
        assert np.max(np.abs(P[n])) <= np.sqrt((2 * n + 1) / 2) + 1e-12


def test_no_condon_shortley_phase():
    P = legendre_norm_all(7, np.array([0.9]))
    assert np.all(np.diag(P[:, :, 0]) > 0)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        legendre_assoc(2, 3, 0.0)
    with pytest.raises(ValueError):
        legendre_norm(2, 1, 1.5)
    with pytest.raises(ValueError):
        real_basis(-1, 0.0, 0.0)


def test_spline_exact_at_knots_and_accurate_between():
    t = build_spline_table(7)
    assert t.knots.size == 721
    np.testing.assert_array_equal(t.evaluate(t.knots), t.values)
    lat = np.arange(-9000, 9001) / 100.0
    err = np.max(np.abs(t.evaluate(lat) - legendre_norm_all(7, np.sin(np.radians(lat)))))
    assert err < 1e-6
    assert t.evaluate(12.5).shape == (8, 8)
    with pytest.raises(ValueError):
        t.evaluate(90.5)


def test_real_basis_layout():
    assert basis_size(7) == 64
    assert sum(d if m == 0 else 2 * d for m, (s, d) in enumerate(basis_slices(7))) == 64
    B = real_basis(7, np.array([10.0, -33.0]), np.array([0.0, 0.0]))
    assert B.shape == (2, 64)
    np.testing.assert_allclose(B[:, 0], 1 / np.sqrt(2))
    for m, (s, d) in enumerate(basis_slices(7)):
        if m:
            assert np.all(B[:, s + d : s + 2 * d] == 0)


def test_real_basis_from_spline_table():
    t = build_spline_table(7)
    rng = np.random.default_rng(5)
    lat, lon = rng.uniform(-90, 90, 50), rng.uniform(-180, 180, 50)
    np.testing.assert_allclose(real_basis(5, lat, lon, t), real_basis(5, lat, lon), atol=1e-6)
    with pytest.raises(ValueError):
        real_basis(8, lat, lon, t)


def test_real_basis_orthogonal_on_sphere():
    # Gauss in sin(L), uniform in longitude: integral of u u^T is 2 pi I
    N = 6
    x, w = np.polynomial.legendre.leggauss(20)
    lon = np.arange(32) * 360.0 / 32
    L, l = np.meshgrid(np.degrees(np.arcsin(x)), lon, indexing="ij")
    W = np.repeat(w, lon.size) * (2 * np.pi / lon.size)
    B = real_basis(N, L.ravel(), l.ravel())
    np.testing.assert_allclose(B.T @ (W[:, None] * B), 2 * np.pi * np.eye(basis_size(N)),
                               atol=1e-12)


@given(st.integers(0, 7), st.floats(-90, 90), st.floats(-180, 180),
       st.floats(-90, 90), st.floats(-180, 180))
def test_addition_theorem_per_degree(n, L1, l1, L2, l2):
    B1, B2 = real_basis(7, L1, l1), real_basis(7, L2, l2)
    idx = [s + (n - m) + k * (7 - m + 1) for m, (s, d) in enumerate(basis_slices(7)) if m <= n
           for k in ((0,) if m == 0 else (0, 1))]
    lhs = B1[idx] @ B2[idx]
    cosg = math.cos(math.radians(central_angle_deg(L1, l1, L2, l2)))
    assert lhs == pytest.approx((2 * n + 1) / 2 * eval_legendre(n, cosg), abs=1e-10)


def test_mean_terms_and_design():
    terms = mean_terms()
    # intercept plus 78 non-constant covariates
    assert len(terms) == 79
    assert len([t for t in terms if t[0] > 0]) == 78
    assert terms[:4] == [(0, 0, "cos"), (1, 0, "cos"), (1, 1, "cos"), (1, 1, "sin")]
    row = mean_design_row(0.0, 0.0)
    assert row.shape == (79,)
    assert row[0] == 1.0
    assert all(row[i] == 0 for i, t in enumerate(terms) if t[2] == "sin")
    assert mean_design_row(30.0, 0.0)[terms.index((1, 0, "cos"))] == pytest.approx(0.5)
    D = mean_design(np.array([10.0, 20.0]), np.array([30.0, 40.0]))
    np.testing.assert_allclose(D[1], mean_design_row(20.0, 40.0))
