"""
Spatial mean removal by least squares on spherical-harmonic regressors.

Observations are averaged into 1 degree latitude by 2 degree longitude
cells anchored at (-90, -180), and the mean surface is fitted by ordinary
least squares to the bin averages, with regressors evaluated at the bin mean
coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .geom import ObsTable, as_table
from .harmonics import MEAN_MAX_DEGREE, MEAN_MAX_ORDER, mean_design, mean_terms

LAT_BIN = 1.0
LON_BIN = 2.0


class SingularFitError(ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        names = ", ".join(f"(n={n}, m={m}, {t})" for n, m, t in self.columns)
        super().__init__(f"rank-deficient design; deficient columns: {names}")


@dataclass(frozen=True)
class BinAverage:
    mean_lat: float
    mean_lon: float
    mean_value: float
    count: int


@dataclass(frozen=True)
class MeanModel:
    coefficients: np.ndarray = field(repr=False)
    max_degree: int = MEAN_MAX_DEGREE
    max_order: int = MEAN_MAX_ORDER

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        if c.size != len(self.terms):
            raise ValueError(f"expected {len(self.terms)} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def terms(self):
        return mean_terms(self.max_degree, self.max_order)

    def evaluate(self, lat, lon):
        return mean_design(lat, lon, self.max_degree, self.max_order) @ self.coefficients


@dataclass(frozen=True)
class MeanFitReport:
    r2_bins: float
    r2_obs: float | None
    n_bins: int
    n_obs: int | None


def _cell_index(lat, lon):
    i = np.floor((lat + 90.0) / LAT_BIN).astype(np.int64)
    i = np.minimum(i, int(180 / LAT_BIN) - 1)  # lat == 90 joins the top row
    j = np.floor((lon + 180.0) / LON_BIN).astype(np.int64)
    j = np.minimum(j, int(360 / LON_BIN) - 1)  # lon == 180 joins the last column
    return i * int(360 / LON_BIN) + j


def bin_average(obs):
    """Per-cell means of latitude, longitude and value. Cells ordered by index."""
    obs = as_table(obs)
    if not len(obs):
        return []
    cell = _cell_index(obs.lat, obs.lon)
    order = np.argsort(cell, kind="stable")
    cell = cell[order]
    starts = np.flatnonzero(np.r_[True, cell[1:] != cell[:-1]])
    counts = np.diff(np.r_[starts, cell.size])
    out = []
    lat, lon, val = obs.lat[order], obs.lon[order], obs.value[order]
    for s, c in zip(starts, counts):
        sl = slice(s, s + c)
        out.append(BinAverage(float(np.mean(lat[sl])), float(np.mean(lon[sl])),
                              float(np.mean(val[sl])), int(c)))
    return out


def _r2(y, fitted):
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    ss_res = float(np.sum((y - fitted) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def fit_mean(bins, obs=None, max_degree=MEAN_MAX_DEGREE, max_order=MEAN_MAX_ORDER,
             rtol=1e-10):
    """Least-squares mean model from bin averages.

    Solved by column-pivoted QR. If ``obs`` is given, the report also
    carries the fraction of variation explained in the raw observations.

    Raises
    ------
    SingularFitError
        If the design has deficient numerical rank; names the columns the
        pivoting pushed past the rank.
    """
    terms = mean_terms(max_degree, max_order)
    if len(bins) < len(terms):
        raise SingularFitError(terms[len(bins):])
    lat = np.array([b.mean_lat for b in bins])
    lon = np.array([b.mean_lon for b in bins])
    y = np.array([b.mean_value for b in bins])
    X = mean_design(lat, lon, max_degree, max_order)
    # column scaling keeps the rank test meaningful across degrees
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Q, R, piv = scipy.linalg.qr(X / scale, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rtol * diag[0])) if diag.size else 0
    if rank < len(terms):
        raise SingularFitError([terms[k] for k in piv[rank:]])
    z = scipy.linalg.solve_triangular(R, Q.T @ y)
    coef = np.empty(len(terms))
    coef[piv] = z
    coef /= scale
    model = MeanModel(coef, max_degree, max_order)
    r2_obs = None
    if obs is not None:
        obs = as_table(obs)
        r2_obs = _r2(obs.value, model.evaluate(obs.lat, obs.lon))
    report = MeanFitReport(_r2(y, X @ coef), r2_obs, len(bins),
                           None if obs is None else len(obs))
    return model, report


def residuals(obs, model: MeanModel) -> ObsTable:
    """Subtract the fitted mean surface; all other fields are kept."""
    obs = as_table(obs)
    return obs.with_values(obs.value - model.evaluate(obs.lat, obs.lon))


def save_mean_model(path, model: MeanModel, report: MeanFitReport | None = None):
    doc = {
        "kind": "mean_model",
        "max_degree": model.max_degree,
        "max_order": model.max_order,
        "columns": ["n", "m", "trig", "coefficient"],
        "rows": [[n, m, t, float(c)] for (n, m, t), c in zip(model.terms, model.coefficients)],
    }
    if report is not None:
        doc["report"] = {"r2_bins": report.r2_bins, "r2_obs": report.r2_obs,
                         "n_bins": report.n_bins, "n_obs": report.n_obs}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_mean_model(path) -> MeanModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") != "mean_model":
        raise ValueError(f"{path}: not a mean model file")
    model = MeanModel([r[3] for r in doc["rows"]], int(doc["max_degree"]), int(doc["max_order"]))
    if [tuple(r[:3]) for r in doc["rows"]] != [tuple(t) for t in model.terms]:
        raise ValueError(f"{path}: row order does not match the regressor ordering")
    return model
