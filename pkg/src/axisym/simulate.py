"""
Exact simulation from truncated harmonic models, and synthetic swath geometry.

Random streams are Philox generators keyed by ``SeedSequence(seed,
spawn_key=...)``:

* ``(0, m)`` - coefficients of wavenumber m
* ``(1,)``   - nugget noise, drawn in point order

so each block is reproducible on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import HarmonicCovariance
from .geom import ObsTable, as_table, wrap_lon
from .harmonics import legendre_norm_all

EARTH_DAY_S = 86400.0


def _rng(seed, *key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class CoefficientDraw:
    """``Y[m]`` holds ``(Y_mm, ..., Y_Nm)``; real for m = 0, complex otherwise.

    With a batch draw each array has a leading axis of length ``size``.
    Negative wavenumbers are implied by ``Y_{n,-m} = conj(Y_nm)``.
    """

    N: int
    Y: tuple = field(repr=False)
    seed: int = 0

    @property
    def batch(self):
        return self.Y[0].ndim == 2


def sample_coefficients(model: HarmonicCovariance, seed: int, size: int | None = None):
    """Draw the random coefficients of the expansion.

    m = 0: ``A_0 w`` with ``w`` standard normal. m >= 1: ``A_m w`` with ``w``
    complex normal whose real and imaginary parts are independent with
    variance 1/2 each, so ``E[Y Y^*] = C_m`` and ``E[Y Y^T] = 0``.
    """
    shape = () if size is None else (int(size),)
    Y = []
    for m, a in enumerate(model.A):
        d = a.shape[0]
        g = _rng(seed, 0, m)
        if m == 0:
            w = g.standard_normal(shape + (d,))
        else:
            w = (g.standard_normal(shape + (d,)) + 1j * g.standard_normal(shape + (d,))) / np.sqrt(2.0)
        Y.append(w @ a.T)
    return CoefficientDraw(model.N, tuple(Y), seed)


def _field(draw, lat, lon):
    P = legendre_norm_all(draw.N, np.sin(np.radians(lat)))  # (n, m, npts)
    lam = np.radians(lon)
    z = 0.0
    for m, y in enumerate(draw.Y):
        pm = P[m:, m]  # (d, npts)
        t = y @ pm  # (..., npts)
        if m == 0:
            z = z + t
        else:
            z = z + 2.0 * np.real(t * np.exp(1j * m * lam))
    return z


def synthesize_field(draw: CoefficientDraw, lat, lon, nugget: float = 0.0, seed: int = 0):
    """Evaluate the truncated expansion at points and add nugget noise.

    Uses conjugate symmetry so the sum is real by construction: the m = 0
    term plus twice the real part of each m >= 1 term. Noise is
    ``sqrt(nugget)`` times standard normals from the nugget stream of ``seed``.
    """
    lat = np.atleast_1d(np.asarray(lat, dtype=float))
    lon = np.atleast_1d(np.asarray(lon, dtype=float))
    z = np.broadcast_to(_field(draw, lat, lon), (draw.Y[0].shape[:-1] + lat.shape)).copy()
    if nugget > 0:
        z += np.sqrt(nugget) * _rng(seed, 1).standard_normal(z.shape)
    return z


def synthesize_field_complex(draw: CoefficientDraw, lat, lon):
    """Full sum over m = -N..N in complex arithmetic (check path, no noise)."""
    lat = np.atleast_1d(np.asarray(lat, dtype=float))
    lam = np.radians(np.atleast_1d(np.asarray(lon, dtype=float)))
    P = legendre_norm_all(draw.N, np.sin(np.radians(lat)))
    z = np.zeros(draw.Y[0].shape[:-1] + lat.shape, dtype=complex)
    for m in range(-draw.N, draw.N + 1):
        am = abs(m)
        y = draw.Y[am] if m >= 0 else np.conj(draw.Y[am])
        z += (y @ P[am:, am]) * np.exp(1j * m * lam)
    return z


def simulate_values(model: HarmonicCovariance, lat, lon, seed: int, size: int | None = None):
    """Field values (nugget included) at points; ``size`` gives a batch."""
    draw = sample_coefficients(model, seed, size)
    return synthesize_field(draw, lat, lon, model.nugget, seed)


def simulate_observations(model: HarmonicCovariance, template, seed: int, offset=0.0) -> ObsTable:
    """Replace the values of ``template`` with a simulated field plus ``offset``.

    ``offset`` may be an array (e.g. a mean surface evaluated at the points).
    """
    obs = as_table(template)
    z = simulate_values(model, obs.lat, obs.lon, seed)
    return obs.with_values(z + offset)


def synthetic_orbits(n_orbits: int = 2, scans_per_orbit: int = 120, points_per_scan: int = 35,
                     swath_half_width: float = 13.5, inclination: float = 99.0,
                     period_s: float = 6240.0, start_lon: float = 0.0, first_orbit: int = 0,
                     lat_limits=(-73.0, 90.0), t0: float = 0.0) -> ObsTable:
    """Swath geometry for a polar orbiter scanning across track.

    Each orbit contributes its ascending half (argument of latitude from
    -90 to 90 degrees) as ``scans_per_orbit`` scans of ``points_per_scan``
    points spread over ``+-swath_half_width`` degrees of great-circle arc
    perpendicular to the track. The ground track drifts west with Earth's
    rotation. Values are zero; fill them with :func:`simulate_observations`.
    Points outside ``lat_limits`` are dropped.
    """
    inc = np.radians(inclination)
    u = np.radians(np.linspace(-90.0, 90.0, scans_per_orbit))
    alpha = np.radians(np.linspace(-swath_half_width, swath_half_width, points_per_scan))
    cols = [[] for _ in range(5)]
    for o in range(n_orbits):
        node = np.radians(start_lon)
        t_scan = t0 + o * period_s + (u + np.pi / 2) / (2 * np.pi) * period_s
        # orbital plane fixed in inertial space; Earth rotates beneath
        s = np.stack([np.cos(u) * np.cos(node) - np.sin(u) * np.cos(inc) * np.sin(node),
                      np.cos(u) * np.sin(node) + np.sin(u) * np.cos(inc) * np.cos(node),
                      np.sin(u) * np.sin(inc)], axis=-1)
        normal = np.array([np.sin(inc) * np.sin(node), -np.sin(inc) * np.cos(node), np.cos(inc)])
        p = np.cos(alpha)[None, :, None] * s[:, None, :] + np.sin(alpha)[None, :, None] * normal
        lat = np.degrees(np.arcsin(np.clip(p[..., 2], -1, 1)))
        lon = np.degrees(np.arctan2(p[..., 1], p[..., 0]))
        lon = lon - 360.0 * (t_scan[:, None] - t0) / EARTH_DAY_S
        t = np.broadcast_to(t_scan[:, None], lat.shape)
        keep = (lat >= lat_limits[0]) & (lat <= lat_limits[1])
        cols[0].append(np.full(int(keep.sum()), first_orbit + o))
        cols[1].append(t[keep])
        cols[2].append(lat[keep])
        cols[3].append(wrap_lon(lon[keep]))
        cols[4].append(np.zeros(int(keep.sum())))
    return ObsTable(*(np.concatenate(c) for c in cols))


def random_sphere_points(n: int, rng, lat_range=(-90.0, 90.0)):
    """Points uniform on the sphere (restricted to a latitude band)."""
    lo, hi = np.sin(np.radians(lat_range[0])), np.sin(np.radians(lat_range[1]))
    lat = np.degrees(np.arcsin(rng.uniform(lo, hi, n)))
    lon = rng.uniform(-180.0, 180.0, n)
    return lat, np.asarray(wrap_lon(lon))
