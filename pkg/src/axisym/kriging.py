"""
Simple kriging of residuals and the per-orbit gridded ("Level 2.5") product.

Kriging assumes mean zero. The observation covariance carries the nugget on
its diagonal; cross-covariances to targets do not, and the reported variance
``K(t, t) + nugget - k^T C^-1 k`` is that of a fresh measurement at the target.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .covariance import ExpChordalModel, HarmonicCovariance, factor_embedding, sigma_embedding
from .fitting import FactorizationError, exp_cov_matrix, harmonic_cov_matrix
from .geom import GeoPoint, ObsTable, as_table, wrap_lon
from .harmonics import real_basis
from .mean import MeanModel, residuals

log = logging.getLogger(__name__)

VARIANCE_CLIP = 1e-10


@dataclass(frozen=True)
class KrigingResult:
    prediction: np.ndarray
    variance: np.ndarray


def _targets(targets):
    if isinstance(targets, tuple) and len(targets) == 2:
        lat, lon = targets
        return np.atleast_1d(np.asarray(lat, float)), np.atleast_1d(np.asarray(lon, float))
    pts = [t if isinstance(t, GeoPoint) else GeoPoint(*t) for t in targets]
    return np.array([p.lat for p in pts]), np.array([p.lon for p in pts])


def _check_var(var, scale):
    bad = var < -VARIANCE_CLIP * max(scale, 1.0)
    if np.any(bad):
        raise FactorizationError(f"negative kriging variance {var[bad].min():.3e}")
    return np.clip(var, 0.0, None)


def _krige_lowrank(model: HarmonicCovariance, obs: ObsTable, tlat, tlon):
    M = factor_embedding(model)
    B = real_basis(model.N, obs.lat, obs.lon)
    G = M.T @ (B.T @ B) @ M
    H = 0.5 * (G + G.T) + model.nugget * np.eye(G.shape[0])
    try:
        cf = scipy.linalg.cho_factor(H, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(str(exc)) from None
    c = M.T @ (B.T @ obs.value)
    Ft = real_basis(model.N, tlat, tlon) @ M  # rows f_t = M^T u_t
    pred = Ft @ scipy.linalg.cho_solve(cf, c)
    var = model.nugget * (1.0 + np.sum(Ft * scipy.linalg.cho_solve(cf, Ft.T).T, axis=1))
    return pred, _check_var(var, model.nugget)


def _krige_dense(C, k, ktt, z):
    try:
        cf = scipy.linalg.cho_factor(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"observation covariance is singular: {exc}") from None
    pred = k @ scipy.linalg.cho_solve(cf, z)
    var = ktt - np.sum(k * scipy.linalg.cho_solve(cf, k.T).T, axis=1)
    return pred, _check_var(var, float(np.max(ktt)) if ktt.size else 1.0)


def krige_residuals(model, obs, targets, dense: bool = False) -> KrigingResult:
    """Simple-kriging predictions and variances (log scale) at targets.

    ``targets`` is a sequence of :class:`GeoPoint` / ``(lat, lon)`` pairs or a
    ``(lat_array, lon_array)`` tuple. Harmonic models with a positive
    nugget use the Woodbury path unless ``dense=True``.
    """
    obs = as_table(obs)
    tlat, tlon = _targets(targets)
    if isinstance(model, HarmonicCovariance):
        if model.nugget > 0 and not dense:
            pred, var = _krige_lowrank(model, obs, tlat, tlon)
        else:
            S = sigma_embedding(model)
            Bo = real_basis(model.N, obs.lat, obs.lon)
            Bt = real_basis(model.N, tlat, tlon)
            C = harmonic_cov_matrix(model, obs)
            k = Bt @ S @ Bo.T
            ktt = np.einsum("ti,ij,tj->t", Bt, S, Bt) + model.nugget
            pred, var = _krige_dense(C, k, ktt, obs.value)
    elif isinstance(model, ExpChordalModel):
        C = exp_cov_matrix(model, obs)
        tgt = ObsTable(np.zeros(tlat.size, int), np.zeros(tlat.size), tlat, tlon, np.zeros(tlat.size))
        k = exp_cov_matrix(model, tgt, obs)
        ktt = np.full(tlat.size, model.theta1 + model.nugget)
        pred, var = _krige_dense(C, k, ktt, obs.value)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return KrigingResult(pred, var)


# --- Level 2.5 product ---------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Grid points at ``lat_min..lat_max`` by ``lat_step`` and every
    ``lon_step`` degrees from ``lon_origin``."""

    lat_min: float = -62.5
    lat_max: float = -57.5
    lat_step: float = 1.0
    lon_step: float = 5.0
    lon_origin: float = 0.0

    @property
    def lats(self):
        n = int(np.floor((self.lat_max - self.lat_min) / self.lat_step + 1e-9)) + 1
        return self.lat_min + self.lat_step * np.arange(n)

    @property
    def lons(self):
        n = int(round(360.0 / self.lon_step))
        return np.sort(np.asarray(wrap_lon(self.lon_origin + self.lon_step * np.arange(n))))


@dataclass(frozen=True)
class GriddedPrediction:
    lat: float
    lon: float
    orbit_id: int
    representative_time: float
    predicted_median_du: float
    pred_variance_log: float


def covered_lons(lons, grid_lons, pad):
    """Grid longitudes inside the wrapped hull of ``lons`` padded by ``pad``.

    The hull is the circle minus its largest empty gap between sorted
    longitudes.
    """
    l = np.sort(np.mod(np.asarray(lons, float), 360.0))
    if l.size == 0:
        return np.zeros(len(grid_lons), bool)
    gaps = np.diff(np.r_[l, l[0] + 360.0])
    g = int(np.argmax(gaps))
    start = l[(g + 1) % l.size]
    width = 360.0 - gaps[g]
    off = np.mod(np.asarray(grid_lons, float) - (start - pad), 360.0)
    return off <= width + 2 * pad


def _orbit_product(orbit, model, mean_model, grid, lat_window):
    obs = as_table(orbit)
    sel = (obs.lat >= lat_window[0]) & (obs.lat <= lat_window[1])
    if not np.any(sel):
        log.warning("orbit %s has no observations in %s; skipped", orbit.orbit_id, lat_window)
        return []
    sub = obs.take(np.flatnonzero(sel))
    res = residuals(sub, mean_model)
    glons = grid.lons[covered_lons(sub.lon, grid.lons, grid.lon_step)]
    if glons.size == 0:
        return []
    LA, LO = np.meshgrid(grid.lats, glons, indexing="ij")
    tlat, tlon = LA.ravel(), LO.ravel()
    kr = krige_residuals(model, res, (tlat, tlon))
    med = np.exp(kr.prediction + mean_model.evaluate(tlat, tlon))
    t = float(np.mean(sub.time))
    return [GriddedPrediction(float(a), float(b), int(orbit.orbit_id), t, float(m), float(v))
            for a, b, m, v in zip(tlat, tlon, med, kr.variance)]


def level25_product(orbits, model, mean_model: MeanModel, grid: GridSpec = GridSpec(),
                    lat_window=(-65.0, -55.0), include=None, exclude=(), threads: int = 1):
    """Krige each orbit separately onto the grid and back-transform.

    Predictions are ``exp(kriged residual + mean surface)``: medians on the
    Dobson scale, with no lognormal mean correction. Overlapping orbits give
    several records per grid point. Output is sorted by (orbit, lat, lon).
    """
    if not isinstance(orbits, (list, tuple)):
        orbits = as_table(orbits).orbits()
    chosen = [o for o in orbits
              if (include is None or o.orbit_id in set(include)) and o.orbit_id not in set(exclude)]
    work = lambda o: _orbit_product(o, model, mean_model, grid, lat_window)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, chosen))
    else:
        parts = [work(o) for o in chosen]
    out = [p for part in parts for p in part]
    out.sort(key=lambda g: (g.orbit_id, g.lat, g.lon))
    return out


PRODUCT_COLUMNS = ("orbit_id", "time_s", "lat_deg", "lon_deg", "ozone_du_median", "var_log")


def write_product(path, records):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(PRODUCT_COLUMNS)
        for g in records:
            w.writerow([g.orbit_id, repr(g.representative_time), repr(g.lat), repr(g.lon),
                        repr(g.predicted_median_du), repr(g.pred_variance_log)])


def read_product(path):
    out = []
    with Path(path).open(newline="") as fh:
        rows = csv.reader(fh, delimiter="\t")
        header = next(rows)
        if tuple(header) != PRODUCT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in rows:
            out.append(GriddedPrediction(float(row[2]), float(row[3]), int(row[0]),
                                         float(row[1]), float(row[4]), float(row[5])))
    return out
