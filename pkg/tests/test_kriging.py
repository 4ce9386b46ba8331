import logging

import numpy as np
import pytest

from axisym.covariance import ExpChordalModel, HarmonicCovariance
from axisym.geom import GeoPoint
from axisym.harmonics import mean_terms
from axisym.kriging import (
    GridSpec, covered_lons, krige_residuals, level25_product, read_product, write_product,
)
from axisym.mean import MeanModel
from axisym.simulate import random_sphere_points, simulate_observations, synthetic_orbits

from conftest import obs_from, simulated_obs


def test_exp_zero_nugget_interpolates(rng):
    m = ExpChordalModel(1.0, 0.3, 0.0)
    lat, lon = random_sphere_points(30, rng)
    obs = obs_from(lat, lon, rng.standard_normal(30))
    kr = krige_residuals(m, obs, (lat, lon))
    np.testing.assert_allclose(kr.prediction, obs.value, atol=1e-9)
    np.testing.assert_allclose(kr.variance, 0.0, atol=1e-9)


def test_pure_nugget_predicts_zero(rng):
    m = ExpChordalModel(0.0, 0.3, 0.4)
    obs = obs_from(*random_sphere_points(20, rng), rng.standard_normal(20))
    kr = krige_residuals(m, obs, [GeoPoint(10.0, 20.0), (-30.0, 5.0)])
    np.testing.assert_allclose(kr.prediction, 0.0, atol=1e-14)
    np.testing.assert_allclose(kr.variance, 0.4)


def test_linear_in_data(rng):
    model = HarmonicCovariance.random(3, rng, nugget=0.05)
    lat, lon = random_sphere_points(60, rng)
    z1, z2 = rng.standard_normal((2, 60))
    t = random_sphere_points(15, rng)
    k = lambda z: krige_residuals(model, obs_from(lat, lon, z), t).prediction  # noqa: E731
    np.testing.assert_allclose(k(2.0 * z1 - 3.0 * z2), 2.0 * k(z1) - 3.0 * k(z2), atol=1e-10)


@pytest.mark.parametrize("N", [2, 5])
def test_lowrank_equals_dense(N, rng):
    model = HarmonicCovariance.random(N, rng, scale=0.3, nugget=0.02)
    obs = simulated_obs(model, 200, rng)
    t = random_sphere_points(30, rng)
    a = krige_residuals(model, obs, t)
    b = krige_residuals(model, obs, t, dense=True)
    np.testing.assert_allclose(a.prediction, b.prediction, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(a.variance, b.variance, rtol=1e-8, atol=1e-10)
    assert np.all(a.variance >= model.nugget - 1e-12)


def test_continuity_as_nugget_vanishes(rng):
    base = HarmonicCovariance.random(3, rng)
    obs = simulated_obs(base, 40, rng)  # fewer points than basis functions cannot pin the field
    t = random_sphere_points(10, rng)
    preds = [krige_residuals(base.replace(nugget=v), obs, t, dense=True).prediction
             for v in (1e-4, 1e-6, 1e-8)]
    assert np.max(np.abs(preds[1] - preds[2])) < np.max(np.abs(preds[0] - preds[1])) + 1e-12
    assert np.max(np.abs(preds[1] - preds[2])) < 1e-3


def test_variance_at_observation_with_tiny_nugget(rng):
    model = HarmonicCovariance.random(4, rng, nugget=1e-8)
    obs = simulated_obs(model, 10, rng)
    kr = krige_residuals(model, obs, (obs.lat, obs.lon), dense=True)
    np.testing.assert_allclose(kr.prediction, obs.value, atol=1e-5)
    assert np.all(kr.variance < 1e-6)


def test_rejects_unknown_model(rng):
    with pytest.raises(TypeError):
        krige_residuals(object(), obs_from([0.0], [0.0], [1.0]), [(0.0, 0.0)])


def test_covered_lons_wraps():
    grid = np.arange(-180.0, 180.0, 5.0)
    cov = covered_lons([170.0, 175.0, -178.0, -172.0], grid, 5.0)
    assert set(grid[cov]) == {165.0, 170.0, 175.0, -180.0, -175.0, -170.0}
    assert not covered_lons([], grid, 5.0).any()


def test_grid_spec():
    g = GridSpec()
    np.testing.assert_allclose(g.lats, [-62.5, -61.5, -60.5, -59.5, -58.5, -57.5])
    assert g.lons.size == 72 and g.lons[0] == -175.0 and g.lons[-1] == 180.0


# --- gridded product ---------------------------------------------------------


@pytest.fixture(scope="module")
def product_inputs():
    rng = np.random.default_rng(5)
    model = HarmonicCovariance.random(4, rng, scale=0.2, nugget=0.01)
    template = synthetic_orbits(3, 60, 15)
    obs = simulate_observations(model, template, seed=3, offset=np.log(300.0))
    coef = np.zeros(len(mean_terms(12, 3)))
    coef[0] = np.log(300.0)
    return model, MeanModel(coef), obs


def test_level25_product(product_inputs):
    model, mean, obs = product_inputs
    prods = level25_product(obs.orbits(), model, mean)
    assert prods
    assert {p.lat for p in prods} <= set(GridSpec().lats)
    assert {p.orbit_id for p in prods} == {0, 1, 2}
    per_point = {}
    for p in prods:
        per_point.setdefault((p.lat, p.lon), []).append(p.orbit_id)
    assert max(len(v) for v in per_point.values()) >= 2
    assert all(p.predicted_median_du > 0 and p.pred_variance_log >= 0 for p in prods)
    med = np.median([p.predicted_median_du for p in prods])
    assert 150 < med < 600
    keys = [(p.orbit_id, p.lat, p.lon) for p in prods]
    assert keys == sorted(keys)
    for o in obs.orbits():
        t = [p.representative_time for p in prods if p.orbit_id == o.orbit_id]
        sel = (o.obs.lat >= -65) & (o.obs.lat <= -55)
        assert t[0] == pytest.approx(np.mean(o.obs.time[sel]))


def test_level25_matches_direct_kriging(product_inputs):
    model, mean, obs = product_inputs
    orbit = obs.orbits()[1]
    prods = level25_product([orbit], model, mean)
    sel = (orbit.obs.lat >= -65) & (orbit.obs.lat <= -55)
    sub = orbit.obs.take(np.flatnonzero(sel))
    res = sub.with_values(sub.value - mean.evaluate(sub.lat, sub.lon))
    kr = krige_residuals(model, res, ([p.lat for p in prods], [p.lon for p in prods]))
    np.testing.assert_allclose([np.log(p.predicted_median_du) for p in prods],
                               kr.prediction + np.log(300.0), rtol=1e-12)


def test_level25_include_exclude_and_threads(product_inputs):
    model, mean, obs = product_inputs
    full = level25_product(obs.orbits(), model, mean)
    assert level25_product(obs.orbits(), model, mean, threads=3) == full
    only = level25_product(obs.orbits(), model, mean, include=[1])
    assert {p.orbit_id for p in only} == {1}
    rest = level25_product(obs.orbits(), model, mean, exclude=[1])
    assert {p.orbit_id for p in rest} == {0, 2}
    assert len(only) + len(rest) == len(full)


def test_level25_skips_orbit_outside_window(product_inputs, caplog):
    model, mean, obs = product_inputs
    with caplog.at_level(logging.WARNING):
        out = level25_product(obs.orbits(), model, mean, lat_window=(-89.9, -89.8))
    assert out == []
    assert "skipped" in caplog.text


def test_product_roundtrip(product_inputs, tmp_path):
    model, mean, obs = product_inputs
    prods = level25_product(obs.orbits()[:1], model, mean)
    write_product(tmp_path / "p.tsv", prods)
    assert read_product(tmp_path / "p.tsv") == prods
