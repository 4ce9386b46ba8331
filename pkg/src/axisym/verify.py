"""
Self-checks comparing fast paths against direct computations.

Each check returns a :class:`Check` with the observed discrepancy and the
tolerance it must stay under. Sizes are small so the whole table runs in a
few seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre

from .covariance import (
    BlockModel, HarmonicCovariance, K, assemble_blocks, block_dims, gamma_model, param_count,
    sigma_embedding,
)
from .fitting import WlsProblem, harmonic_cov_matrix, loglik_dense, loglik_lowrank, wls_criterion
from .geom import ObsTable, central_angle_deg
from .harmonics import build_spline_table, legendre_norm_all, real_basis
from .kriging import krige_residuals
from .simulate import random_sphere_points, simulate_values
from .variogram import VariogramRecord


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return bool(self.value < self.tol)


def _obs(model, n, rng, seed):
    lat, lon = random_sphere_points(n, rng)
    z = simulate_values(model, lat, lon, seed)
    return ObsTable(np.zeros(n, int), np.arange(n, dtype=float), lat, lon, z)


def check_loglik(rng, n_models=4, n_obs=200):
    worst = 0.0
    for i in range(n_models):
        model = HarmonicCovariance.random((2, 4, 7)[i % 3], rng, scale=0.3)
        obs = _obs(model, n_obs, rng, i)
        dense = loglik_dense(harmonic_cov_matrix(model, obs), obs.value)
        worst = max(worst, abs(loglik_lowrank(model, obs) - dense) / abs(dense))
    return Check("loglik low-rank vs dense (rel)", worst, 1e-8)


def check_kriging(rng, n_models=2, n_obs=150, n_targets=20):
    worst = 0.0
    for i in range(n_models):
        model = HarmonicCovariance.random(4, rng, scale=0.3)
        obs = _obs(model, n_obs, rng, 100 + i)
        t = random_sphere_points(n_targets, rng)
        a = krige_residuals(model, obs, t).prediction
        b = krige_residuals(model, obs, t, dense=True).prediction
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    return Check("kriging low-rank vs dense (rel)", worst, 1e-8)


def check_embedding(rng, n_models=3, n_pts=60):
    worst = 0.0
    for _ in range(n_models):
        model = HarmonicCovariance.random(5, rng)
        lat, lon = random_sphere_points(n_pts, rng)
        B = real_basis(model.N, lat, lon)
        direct = K(model, lat[:, None], lat[None, :], lon[:, None] - lon[None, :])
        worst = max(worst, float(np.max(np.abs(B @ sigma_embedding(model) @ B.T - direct))))
    return Check("real embedding vs K", worst, 1e-10)


def check_addition_theorem(rng, N=6, n_pairs=300):
    c = rng.uniform(0.1, 1.0, N + 1)
    A = [np.diag(np.sqrt(c[m:])).astype(float if m == 0 else complex)
         for m, d in enumerate(block_dims(N))]
    model = HarmonicCovariance(N, A, 0.0)
    lat1, lon1 = random_sphere_points(n_pairs, rng)
    lat2, lon2 = random_sphere_points(n_pairs, rng)
    cosg = np.cos(np.radians(central_angle_deg(lat1, lon1, lat2, lon2)))
    ref = sum(c[n] * (2 * n + 1) / 2 * eval_legendre(n, cosg) for n in range(N + 1))
    got = K(model, lat1, lat2, lon1 - lon2)
    return Check("addition theorem (homogeneous)", float(np.max(np.abs(got - ref))), 1e-10)


def perturb_y00_row(model, rng, size=1.0):
    """Same blocks with random changes to row and column 0 of ``C_0``."""
    C = [np.array(c) for c in assemble_blocks(model)]
    d = size * rng.standard_normal(C[0].shape[0])
    C[0][0, :] += d
    C[0][:, 0] += d
    return BlockModel(model.N, tuple(C), model.nugget)


def check_degeneracy(rng, N=5, n_args=300):
    model = HarmonicCovariance.random(N, rng)
    bumped = perturb_y00_row(model, rng)
    L1, L2 = rng.uniform(-90, 90, (2, n_args))
    dl = rng.uniform(-180, 180, n_args)
    dg = float(np.max(np.abs(gamma_model(bumped, L1, L2, dl) - gamma_model(model, L1, L2, dl))))
    recs = [VariogramRecord(float(np.floor(a)), -1, int(np.floor(b)), 0.5, float(b), 0.1, 3)
            for a, b in zip(rng.uniform(-80, 80, 50), rng.uniform(-20, 20, 50))]
    prob = WlsProblem.build(recs, N, freeze_y00=False)
    dc = abs(wls_criterion(bumped, prob) - wls_criterion(model, prob))
    return Check("variogram blind to Y00 row", max(dg, dc), 1e-12)


def check_spline(N=7):
    table = build_spline_table(N)
    lat = np.arange(-9000, 9001) / 100.0
    exact = legendre_norm_all(N, np.sin(np.radians(lat)))
    got = table.evaluate(lat)
    return Check("spline vs recurrence", float(np.max(np.abs(got - exact))), 1e-6)


def check_param_count():
    ok = param_count(6) == 120 and param_count(7) == 177 and real_basis(7, [0.0], [0.0]).shape[1] == 64
    return Check("parameter counts 120/177, basis 64", 0.0 if ok else 1.0, 0.5)


def run_all(seed=0):
    rng = np.random.default_rng(seed)
    return [
        check_param_count(),
        check_spline(),
        check_embedding(rng),
        check_addition_theorem(rng),
        check_degeneracy(rng),
        check_loglik(rng),
        check_kriging(rng),
    ]
