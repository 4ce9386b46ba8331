"""
Associated Legendre functions and spherical-harmonic basis vectors.

Conventions
-----------
* No Condon-Shortley phase: ``P_n^m(x) >= 0`` near ``x = 1``.
* ``Pbar_n^m`` is normalized so that its squared integral on [-1, 1] is 1,
  ``Pbar_n^m = sqrt((2n+1)/2 * (n-m)!/(n+m)!) * P_n^m``.
* Latitude ``L`` enters as ``x = sin(L)``.

Real basis ordering (length ``(N+1)**2``)::

    [Pbar_0^0, Pbar_1^0, ..., Pbar_N^0,                       m = 0
     for m = 1..N:
        sqrt2*Pbar_m^m cos(m l), ..., sqrt2*Pbar_N^m cos(m l),  cosine block
        sqrt2*Pbar_m^m sin(m l), ..., sqrt2*Pbar_N^m sin(m l)]  sine block

Mean-model design ordering: for n = 0..12, for m = 0..min(max_order, n):
the cosine regressor, then (for m >= 1) the sine regressor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma

import numpy as np
from scipy.interpolate import CubicSpline

KNOT_STEP_DEG = 0.25
SQRT2 = np.sqrt(2.0)


def _check_index(n, m):
    if not (isinstance(n, (int, np.integer)) and isinstance(m, (int, np.integer))):
        raise ValueError("degree and order must be integers")
    if n < 0 or m < 0 or m > n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 1.0):
        raise ValueError("argument must lie in [-1, 1]")
    return x


def legendre_assoc(n: int, m: int, x):
    """Unnormalized associated Legendre function ``P_n^m(x)``.

    Standard three-term recurrence in degree, seeded by
    ``P_m^m = (2m-1)!! (1-x^2)^(m/2)`` and ``P_{m+1}^m = (2m+1) x P_m^m``.
    """
    _check_index(n, m)
    x = _check_x(x)
    s = np.sqrt(np.maximum(0.0, (1.0 - x) * (1.0 + x)))
    pmm = np.ones_like(x)
    for k in range(1, m + 1):
        pmm = pmm * (2 * k - 1) * s
    if n == m:
        return pmm if pmm.ndim else float(pmm)
    p1 = (2 * m + 1) * x * pmm
    p0 = pmm
    for k in range(m + 2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k + m - 1) * p0) / (k - m)
    return p1 if p1.ndim else float(p1)


def norm_factor(n: int, m: int) -> float:
    """``sqrt((2n+1)/2 * (n-m)!/(n+m)!)``."""
    return float(np.sqrt((2 * n + 1) / 2.0 * np.exp(lgamma(n - m + 1) - lgamma(n + m + 1))))


def legendre_norm_all(n_max: int, x):
    """All normalized ``Pbar_n^m(x)`` for ``0 <= m <= n <= n_max``.

    Returns an array of shape ``(n_max+1, n_max+1) + x.shape`` indexed
    ``[n, m]``; entries with ``m > n`` are zero. The recurrence runs directly
    on normalized values, so nothing overflows for large orders.
    """
    x = _check_x(x)
    s = np.sqrt(np.maximum(0.0, (1.0 - x) * (1.0 + x)))
    out = np.zeros((n_max + 1, n_max + 1) + x.shape)
    pmm = np.full(x.shape, 1.0 / SQRT2)
    for m in range(n_max + 1):
        if m > 0:
            pmm = pmm * np.sqrt((2 * m + 1) / (2.0 * m)) * s
        out[m, m] = pmm
        if m + 1 <= n_max:
            out[m + 1, m] = np.sqrt(2 * m + 3.0) * x * pmm
        for n in range(m + 2, n_max + 1):
            a = np.sqrt((4.0 * n * n - 1) / (n * n - m * m))
            b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1) ** 2 - 1))
            out[n, m] = a * (x * out[n - 1, m] - b * out[n - 2, m])
    return out


def legendre_norm(n: int, m: int, x):
    """Normalized associated Legendre function ``Pbar_n^m(x)``."""
    _check_index(n, m)
    v = legendre_norm_all(n, x)[n, m]
    return v if np.ndim(v) else float(v)


@dataclass(frozen=True)
class SplineTable:
    """Tabulated ``Pbar_n^m(sin theta)`` on a 0.25 degree latitude grid.

    Knots run from -90 to 90 inclusive (721 of them). Each ``(n, m)`` channel
    carries a cubic spline through the exact knot values; evaluation at a
    knot returns the stored value.
    """

    n_max: int
    knots: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # (n_max+1, n_max+1, n_knots)
    _spline: CubicSpline = field(repr=False, compare=False)

    @property
    def channels(self):
        return [(n, m) for n in range(self.n_max + 1) for m in range(n + 1)]

    def evaluate(self, lat_deg):
        """All channels at latitudes ``lat_deg``; same layout as legendre_norm_all."""
        lat = np.asarray(lat_deg, dtype=float)
        if np.any(np.abs(lat) > 90.0):
            raise ValueError("latitude outside [-90, 90]")
        vals = self._spline(lat)  # (..., n_max+1, n_max+1)
        vals = np.moveaxis(vals, (-2, -1), (0, 1)) if lat.ndim else vals
        # knots must reproduce exactly
        pos = (lat + 90.0) / KNOT_STEP_DEG
        on_knot = pos == np.round(pos)
        if np.any(on_knot):
            k = np.round(pos).astype(int)
            if lat.ndim:
                vals[:, :, on_knot] = self.values[:, :, k[on_knot]]
            else:
                vals = self.values[:, :, int(k)].copy()
        return vals


def build_spline_table(n_max: int) -> SplineTable:
    """Tabulate ``Pbar_n^m(sin theta)`` at 0.25 degree steps and fit splines.

    Not-a-knot end conditions are used at both poles.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    knots = np.linspace(-90.0, 90.0, int(round(180.0 / KNOT_STEP_DEG)) + 1)
    values = legendre_norm_all(n_max, np.sin(np.radians(knots)))
    values.setflags(write=False)
    knots.setflags(write=False)
    spline = CubicSpline(knots, np.moveaxis(values, -1, 0), bc_type="not-a-knot")
    return SplineTable(n_max, knots, values, spline)


def _pbar_at(N, lat_deg, table):
    lat = np.asarray(lat_deg, dtype=float)
    if table is None:
        return legendre_norm_all(N, np.sin(np.radians(lat)))
    if N > table.n_max:
        raise ValueError(f"truncation {N} exceeds table n_max {table.n_max}")
    return table.evaluate(lat)[: N + 1, : N + 1]


def basis_size(N: int) -> int:
    return (N + 1) ** 2


def basis_slices(N: int):
    """Index ranges of each wavenumber in the real basis.

    Returns a list whose entry ``m`` is ``(start, d)`` with ``d = N - m + 1``;
    m = 0 occupies ``d`` entries, m >= 1 occupies ``2d`` (cosines then sines).
    """
    out, start = [], 0
    for m in range(N + 1):
        d = N - m + 1
        out.append((start, d))
        start += d if m == 0 else 2 * d
    return out


def real_basis(N: int, L, l, table: SplineTable | None = None):
    """Real basis vectors spanning the truncated expansion.

    ``L`` and ``l`` are latitude/longitude in degrees (scalars or equal-shape
    arrays). Returns shape ``L.shape + ((N+1)**2,)``. With ``table=None`` the
    Legendre values come from the recurrence; otherwise from the spline table.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    L = np.asarray(L, dtype=float)
    l = np.asarray(l, dtype=float)
    L, l = np.broadcast_arrays(L, l)
    P = _pbar_at(N, L, table)
    lam = np.radians(l)
    out = np.empty(L.shape + (basis_size(N),))
    for m, (start, d) in enumerate(basis_slices(N)):
        pm = np.moveaxis(P[m:, m], 0, -1)  # (..., d)
        if m == 0:
            out[..., start : start + d] = pm
        else:
            out[..., start : start + d] = SQRT2 * pm * np.cos(m * lam)[..., None]
            out[..., start + d : start + 2 * d] = SQRT2 * pm * np.sin(m * lam)[..., None]
    return out


# --- mean model regressors ---------------------------------------------------

MEAN_MAX_DEGREE = 12
MEAN_MAX_ORDER = 3


def mean_terms(max_degree: int = MEAN_MAX_DEGREE, max_order: int = MEAN_MAX_ORDER):
    """Ordered list of ``(n, m, trig)`` regressors, trig in {'cos', 'sin'}."""
    terms = []
    for n in range(max_degree + 1):
        for m in range(min(max_order, n) + 1):
            terms.append((n, m, "cos"))
            if m >= 1:
                terms.append((n, m, "sin"))
    return terms


def _assoc_all(n_max, m_max, x):
    """Unnormalized ``P_n^m(x)`` for ``m <= min(n, m_max)``, by the direct recurrence."""
    P = np.zeros((n_max + 1, m_max + 1) + np.shape(x))
    for n in range(n_max + 1):
        for m in range(min(n, m_max) + 1):
            P[n, m] = legendre_assoc(n, m, x)
    return P


def mean_design(L, l, max_degree: int = MEAN_MAX_DEGREE, max_order: int = MEAN_MAX_ORDER):
    """Design matrix rows ``P_n^m(sin L) cos(m l)`` / ``sin(m l)``.

    Accepts arrays; returns ``L.shape + (n_terms,)``.
    """
    L, l = np.broadcast_arrays(np.asarray(L, dtype=float), np.asarray(l, dtype=float))
    P = _assoc_all(max_degree, max_order, np.sin(np.radians(L)))
    lam = np.radians(l)
    cols = []
    for n, m, trig in mean_terms(max_degree, max_order):
        f = np.cos if trig == "cos" else np.sin
        cols.append(P[n, m] * f(m * lam))
    return np.stack(cols, axis=-1)


def mean_design_row(L: float, l: float, max_degree: int = MEAN_MAX_DEGREE,
                    max_order: int = MEAN_MAX_ORDER):
    """Single regressor row for one point (see :func:`mean_terms` ordering)."""
    return mean_design(float(L), float(l), max_degree, max_order)
