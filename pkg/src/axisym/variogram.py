"""
Binned empirical variograms from pairs of observations.

Pair rules (defaults of :class:`PairConfig`): the first observation of a pair
lies in a band ``[10p, 10p + 1)`` for ``p = -7..8``; the second comes from the
same orbit (or the orbit ``t`` later for cross-orbit variograms). Offsets are
first minus second: ``dlat = L - L'`` and ``dlon = lon_diff(l, l')``. The pair
is kept when ``j = floor(dlat)`` is in ``[-9, 9)`` and ``k = floor(dlon)`` is in
``[-20, 20)``.

Each bin ``(L0, j, k)`` reports half the mean squared difference of values
and the mean offsets of its pairs (not the bin center). Sums use
``math.fsum``, which is exactly rounded, so results do not depend on pair
order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geom import DataError, Orbit, as_table, lon_diff


@dataclass(frozen=True)
class PairConfig:
    band_anchor_step: float = 10.0
    band_width: float = 1.0
    band_min: int = -7
    band_max: int = 8
    max_lat_offset: float = 9.0
    max_lon_offset: float = 20.0
    lat_bin: float = 1.0
    lon_bin: float = 1.0

    def __post_init__(self):
        for name in ("band_anchor_step", "band_width", "max_lat_offset", "max_lon_offset",
                     "lat_bin", "lon_bin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.band_min > self.band_max:
            raise ValueError("band_min > band_max")

    @property
    def j_range(self):
        n = int(round(self.max_lat_offset / self.lat_bin))
        return -n, n

    @property
    def k_range(self):
        n = int(round(self.max_lon_offset / self.lon_bin))
        return -n, n


@dataclass(frozen=True)
class PairSet:
    """Enumerated ordered pairs as parallel arrays.

    ``first``/``second`` index the first and second orbit's observations.
    ``L0`` is the lower edge of the first point's band; ``dz`` is the value
    difference first minus second.
    """

    L0: np.ndarray
    j: np.ndarray
    k: np.ndarray
    first: np.ndarray
    second: np.ndarray
    dlat: np.ndarray
    dlon: np.ndarray
    dz: np.ndarray

    def __len__(self):
        return self.dz.size

    @classmethod
    def concat(cls, sets):
        sets = list(sets)
        if not sets:
            e = np.empty(0)
            ei = np.empty(0, dtype=np.int64)
            return cls(e, ei, ei, ei, ei, e, e, e)
        return cls(*(np.concatenate([getattr(s, f) for s in sets])
                     for f in cls.__dataclass_fields__))


@dataclass(frozen=True)
class VariogramRecord:
    L0: float
    j: int
    k: int
    mean_dlat: float
    mean_dlon: float
    gamma_hat: float
    count: int


def band_of(lat, cfg: PairConfig):
    """Lower band edge for latitudes inside an admissible band, else NaN."""
    lat = np.asarray(lat, dtype=float)
    p = np.floor(lat / cfg.band_anchor_step)
    edge = p * cfg.band_anchor_step
    ok = (lat - edge < cfg.band_width) & (p >= cfg.band_min) & (p <= cfg.band_max)
    return np.where(ok, edge, np.nan)


def enumerate_pairs(orbit, cfg: PairConfig = PairConfig(), second_orbit=None,
                    chunk: int = 256) -> PairSet:
    """All admissible ordered pairs within one orbit (or across two).

    With ``second_orbit=None`` pairs are drawn from the same orbit and an
    observation is never paired with itself (but two observations at
    identical coordinates do pair).
    """
    first = as_table(orbit)
    same = second_orbit is None
    second = first if same else as_table(second_orbit)
    if not len(first) or not len(second):
        return PairSet.concat([])
    band = band_of(first.lat, cfg)
    firsts = np.flatnonzero(~np.isnan(band))
    order = np.argsort(second.lat, kind="stable")
    lat2s = second.lat[order]
    jlo, jhi = cfg.j_range
    klo, khi = cfg.k_range
    # generous search window, exact filtering on computed offsets below
    pad = cfg.lat_bin
    lo = np.searchsorted(lat2s, first.lat[firsts] - jhi * cfg.lat_bin - pad, "left")
    hi = np.searchsorted(lat2s, first.lat[firsts] - jlo * cfg.lat_bin + pad, "right")
    out = []
    for c0 in range(0, firsts.size, chunk):
        f = firsts[c0 : c0 + chunk]
        a, b = lo[c0 : c0 + chunk], hi[c0 : c0 + chunk]
        n = b - a
        if not n.sum():
            continue
        fi = np.repeat(f, n)
        offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
        si = order[np.repeat(a, n) + offs]
        dlat = first.lat[fi] - second.lat[si]
        dlon = np.asarray(lon_diff(first.lon[fi], second.lon[si]), dtype=float)
        j = np.floor(dlat / cfg.lat_bin).astype(np.int64)
        k = np.floor(dlon / cfg.lon_bin).astype(np.int64)
        keep = (j >= jlo) & (j < jhi) & (k >= klo) & (k < khi)
        if same:
            keep &= fi != si
        fi, si, j, k, dlat, dlon = fi[keep], si[keep], j[keep], k[keep], dlat[keep], dlon[keep]
        # canonical order inside a chunk: first index, then second index
        srt = np.lexsort((si, fi))
        fi, si, j, k, dlat, dlon = fi[srt], si[srt], j[srt], k[srt], dlat[srt], dlon[srt]
        out.append(PairSet(band[fi], j, k, fi, si, dlat, dlon,
                           first.value[fi] - second.value[si]))
    return PairSet.concat(out)


def _clamp(x, lo, hi):
    # mean of values in [lo, hi) can round up to hi
    return min(max(x, lo), math.nextafter(hi, -math.inf))


def bin_variogram(pairs: PairSet, cfg: PairConfig = PairConfig()):
    """Bin pairs by ``(L0, j, k)``; records sorted by that key."""
    if not len(pairs):
        return []
    order = np.lexsort((pairs.k, pairs.j, pairs.L0))
    L0, j, k = pairs.L0[order], pairs.j[order], pairs.k[order]
    dlat, dlon, dz = pairs.dlat[order], pairs.dlon[order], pairs.dz[order]
    change = (L0[1:] != L0[:-1]) | (j[1:] != j[:-1]) | (k[1:] != k[:-1])
    starts = np.flatnonzero(np.r_[True, change])
    ends = np.r_[starts[1:], L0.size]
    sq = dz * dz
    records = []
    for s, e in zip(starts, ends):
        q = int(e - s)
        jj, kk = int(j[s]), int(k[s])
        mlat = _clamp(math.fsum(dlat[s:e]) / q, jj * cfg.lat_bin, (jj + 1) * cfg.lat_bin)
        mlon = _clamp(math.fsum(dlon[s:e]) / q, kk * cfg.lon_bin, (kk + 1) * cfg.lon_bin)
        records.append(VariogramRecord(float(L0[s]), jj, kk, mlat, mlon,
                                       math.fsum(sq[s:e]) / (2 * q), q))
    return records


def _orbit_map(orbits):
    if not isinstance(orbits, (list, tuple)):
        orbits = as_table(orbits).orbits()
    return {o.orbit_id: o for o in orbits}


def cross_orbit_pairs(orbits, t: int, cfg: PairConfig = PairConfig()) -> PairSet:
    """Pairs whose second observation lies in orbit ``orbit_id + t``.

    ``t = 0`` gives ordinary within-orbit pairs. Orbits without a partner
    ``t`` orbits away contribute nothing.
    """
    omap = _orbit_map(orbits)
    sets = []
    for oid in sorted(omap):
        if t == 0:
            sets.append(enumerate_pairs(omap[oid], cfg))
        elif oid + t in omap:
            sets.append(enumerate_pairs(omap[oid], cfg, second_orbit=omap[oid + t]))
    return PairSet.concat(sets)


def cross_orbit_variogram(orbits, t: int, cfg: PairConfig = PairConfig()):
    """Binned variogram over pairs ``t`` orbits apart (``t = 0``: same orbit)."""
    return bin_variogram(cross_orbit_pairs(orbits, t, cfg), cfg)


def empirical_variogram(orbits, cfg: PairConfig = PairConfig()):
    """Within-orbit binned variogram over all orbits."""
    return cross_orbit_variogram(orbits, 0, cfg)


VARIOGRAM_COLUMNS = ("L0", "j", "k", "mean_dlat", "mean_dlon", "gamma_hat", "count")


def write_variogram(path, records):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(VARIOGRAM_COLUMNS)
        for r in records:
            w.writerow([repr(r.L0), r.j, r.k, repr(r.mean_dlat), repr(r.mean_dlon),
                        repr(r.gamma_hat), r.count])


def read_variogram(path):
    path = Path(path)
    out = []
    with path.open(newline="") as fh:
        rows = csv.reader(fh, delimiter="\t")
        header = next(rows, None)
        if header is None or tuple(h.strip() for h in header) != VARIOGRAM_COLUMNS:
            raise DataError(f"{path}: line 1: header must be {','.join(VARIOGRAM_COLUMNS)}")
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            try:
                if len(row) != 7:
                    raise ValueError(f"expected 7 fields, got {len(row)}")
                rec = VariogramRecord(float(row[0]), int(row[1]), int(row[2]), float(row[3]),
                                      float(row[4]), float(row[5]), int(row[6]))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            if rec.count < 1 or not rec.gamma_hat >= 0:
                raise DataError(f"{path}: line {lineno}: need count >= 1 and gamma_hat >= 0")
            out.append(rec)
    return out
