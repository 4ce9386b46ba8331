"""
Coordinates, distances and the observation data model.

All public functions take and return degrees. Longitudes are normalized to
the half-open interval (-180, 180]. Distances are computed on the unit
sphere, so chordal distances lie in [0, 2].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Malformed input data (bad rows, invalid coordinates, bad values)."""


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite coordinate")


def wrap_lon(lon):
    """Wrap longitude(s) in degrees into (-180, 180]."""
    lon = np.asarray(lon, dtype=float)
    out = np.mod(lon, 360.0)
    out = np.where(out > 180.0, out - 360.0, out)
    # mod gives [0, 360); -180 must map to 180
    out = np.where(out <= -180.0, out + 360.0, out)
    return out if out.ndim else float(out)


def lon_diff(l1, l2):
    """Longitude difference ``l1 - l2`` wrapped into (-180, 180].

    Works elementwise on arrays. Raises ``ValueError`` on non-finite input.
    """
    _check_finite(l1, l2)
    return wrap_lon(np.asarray(l1, dtype=float) - np.asarray(l2, dtype=float))


def _unit_vectors(lat, lon):
    lat = np.radians(np.asarray(lat, dtype=float))
    lon = np.radians(np.asarray(lon, dtype=float))
    c = np.cos(lat)
    return np.stack([c * np.cos(lon), c * np.sin(lon), np.sin(lat)], axis=-1)


def central_angle_deg(lat1, lon1, lat2, lon2):
    """Great-circle angle in degrees between arrays of points.

    Uses the arctan2 form, which is accurate for both tiny and near-antipodal
    separations.
    """
    _check_finite(lat1, lon1, lat2, lon2)
    p = _unit_vectors(lat1, lon1)
    q = _unit_vectors(lat2, lon2)
    cross = np.linalg.norm(np.cross(p, q), axis=-1)
    dot = np.sum(p * q, axis=-1)
    ang = np.degrees(np.arctan2(cross, dot))
    return ang if np.ndim(ang) else float(ang)


def chordal_distance_arr(lat1, lon1, lat2, lon2):
    """Straight-line distance between unit-sphere embeddings (arrays)."""
    _check_finite(lat1, lon1, lat2, lon2)
    d = np.linalg.norm(_unit_vectors(lat1, lon1) - _unit_vectors(lat2, lon2), axis=-1)
    return d if np.ndim(d) else float(d)


def chordal_matrix(lat, lon, lat2=None, lon2=None):
    """Matrix of pairwise chordal distances.

    With a single point set the result is symmetric with an exactly zero
    diagonal.
    """
    p = _unit_vectors(lat, lon)
    q = p if lat2 is None else _unit_vectors(lat2, lon2)
    # Gram form loses accuracy at small separations; use explicit differences
    d = np.sqrt(np.sum((p[:, None, :] - q[None, :, :]) ** 2, axis=-1))
    if lat2 is None:
        np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere in degrees. Longitude is normalized on creation."""

    lat: float
    lon: float

    def __post_init__(self):
        lat, lon = float(self.lat), float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError(f"non-finite coordinate ({lat}, {lon})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", wrap_lon(lon))


def central_angle(p: GeoPoint, q: GeoPoint) -> float:
    """Great-circle angle between two points, in degrees within [0, 180]."""
    return central_angle_deg(p.lat, p.lon, q.lat, q.lon)


def chordal_distance(p: GeoPoint, q: GeoPoint) -> float:
    """Chord length between two points on the unit sphere, within [0, 2]."""
    return chordal_distance_arr(p.lat, p.lon, q.lat, q.lon)


@dataclass(frozen=True)
class Observation:
    orbit_id: int
    time: float
    point: GeoPoint
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("observation value must be finite")
        if int(self.orbit_id) < 0:
            raise ValueError("orbit_id must be >= 0")


class ObsTable:
    """Columnar, read-only collection of observations.

    Arrays are ``orbit_id``, ``time``, ``lat``, ``lon`` (degrees, normalized)
    and ``value`` (natural log of ozone, or a residual on that scale).
    """

    __slots__ = ("orbit_id", "time", "lat", "lon", "value")

    def __init__(self, orbit_id, time, lat, lon, value):
        orbit_id = np.asarray(orbit_id, dtype=np.int64).ravel()
        arrays = [np.asarray(a, dtype=float).ravel() for a in (time, lat, lon, value)]
        n = orbit_id.size
        if any(a.size != n for a in arrays):
            raise ValueError("column length mismatch")
        time, lat, lon, value = arrays
        if n:
            if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon))):
                raise ValueError("non-finite coordinates")
            if np.any(np.abs(lat) > 90.0):
                raise ValueError("latitude outside [-90, 90]")
            if not np.all(np.isfinite(value)):
                raise ValueError("non-finite values")
            if np.any(orbit_id < 0):
                raise ValueError("negative orbit id")
        lon = np.asarray(wrap_lon(lon), dtype=float).ravel()
        for name, arr in zip(self.__slots__, (orbit_id, time, lat, lon, value)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __setattr__(self, name, value):
        raise AttributeError("ObsTable is immutable")

    def __len__(self):
        return self.value.size

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def __repr__(self):
        return f"ObsTable(n={len(self)}, orbits={np.unique(self.orbit_id).size})"

    def record(self, i) -> Observation:
        return Observation(
            int(self.orbit_id[i]),
            float(self.time[i]),
            GeoPoint(self.lat[i], self.lon[i]),
            float(self.value[i]),
        )

    @classmethod
    def from_records(cls, records: Iterable[Observation]) -> "ObsTable":
        recs = list(records)
        return cls(
            [r.orbit_id for r in recs],
            [r.time for r in recs],
            [r.point.lat for r in recs],
            [r.point.lon for r in recs],
            [r.value for r in recs],
        )

    @classmethod
    def empty(cls) -> "ObsTable":
        return cls([], [], [], [], [])

    def take(self, idx) -> "ObsTable":
        return ObsTable(
            self.orbit_id[idx], self.time[idx], self.lat[idx], self.lon[idx], self.value[idx]
        )

    def with_values(self, values) -> "ObsTable":
        return ObsTable(self.orbit_id, self.time, self.lat, self.lon, values)

    def orbits(self) -> list["Orbit"]:
        """Split into orbits, ordered by orbit id, each sorted by time (stable)."""
        out = []
        for oid in np.unique(self.orbit_id):
            idx = np.flatnonzero(self.orbit_id == oid)
            idx = idx[np.argsort(self.time[idx], kind="stable")]
            out.append(Orbit(int(oid), self.take(idx)))
        return out


def as_table(obs) -> ObsTable:
    """Accept an ObsTable, an Orbit or a sequence of Observation."""
    if isinstance(obs, ObsTable):
        return obs
    if isinstance(obs, Orbit):
        return obs.obs
    return ObsTable.from_records(obs)


@dataclass(frozen=True)
class Orbit:
    orbit_id: int
    obs: ObsTable

    def __post_init__(self):
        if len(self.obs):
            if np.any(self.obs.orbit_id != self.orbit_id):
                raise ValueError("observations from a different orbit")
            if np.any(np.diff(self.obs.time) < 0):
                raise ValueError("orbit observations must be ordered by time")

    def __len__(self):
        return len(self.obs)


def concat(tables: Sequence[ObsTable]) -> ObsTable:
    tables = [as_table(t) for t in tables]
    if not tables:
        return ObsTable.empty()
    return ObsTable(
        *(np.concatenate([getattr(t, k) for t in tables]) for k in ObsTable.__slots__)
    )


# --- file format -----------------------------------------------------------

RAW_COLUMNS = ("orbit_id", "time_s", "lat_deg", "lon_deg", "ozone_du")
LOG_COLUMNS = ("orbit_id", "time_s", "lat_deg", "lon_deg", "value")


def _sniff_delimiter(header_line: str) -> str:
    if "\t" in header_line:
        return "\t"
    if "," in header_line:
        return ","
    return "\t"


def read_observations(path) -> ObsTable:
    """Read a delimited observation file.

    The header decides the value scale: an ``ozone_du`` column holds raw
    Dobson units and is log-transformed on read; a ``value`` column is taken
    as already on the log scale (e.g. residuals). Tab or comma delimited.
    Raises ``DataError`` with the 1-based file line number on a bad row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise DataError(f"{path}: missing header row")
        delim = _sniff_delimiter(first)
        header = [h.strip() for h in next(csv.reader([first], delimiter=delim))]
        if tuple(header) == RAW_COLUMNS:
            raw = True
        elif tuple(header) == LOG_COLUMNS:
            raw = False
        else:
            raise DataError(
                f"{path}: line 1: header must be {','.join(RAW_COLUMNS)} "
                f"or {','.join(LOG_COLUMNS)}, got {','.join(header)}"
            )
        cols = [[] for _ in range(5)]
        for lineno, row in enumerate(csv.reader(fh, delimiter=delim), start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5 or any(not c.strip() for c in row):
                raise DataError(f"{path}: line {lineno}: expected 5 non-empty fields, got {row!r}")
            try:
                oid = int(row[0])
                t, lat, lon, v = (float(c) for c in row[1:])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            if oid < 0:
                raise DataError(f"{path}: line {lineno}: negative orbit_id")
            if not (math.isfinite(lat) and math.isfinite(lon)) or abs(lat) > 90:
                raise DataError(f"{path}: line {lineno}: invalid coordinates ({lat}, {lon})")
            if raw:
                if not (v > 0 and math.isfinite(v)):
                    raise DataError(f"{path}: line {lineno}: ozone must be positive and finite")
                v = math.log(v)
            elif not math.isfinite(v):
                raise DataError(f"{path}: line {lineno}: non-finite value")
            for c, x in zip(cols, (oid, t, lat, lon, v)):
                c.append(x)
    return ObsTable(*cols)


def write_observations(path, obs, raw: bool = False):
    """Write observations; ``raw=True`` exponentiates back to Dobson units."""
    obs = as_table(obs)
    header = RAW_COLUMNS if raw else LOG_COLUMNS
    vals = np.exp(obs.value) if raw else obs.value
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        for i in range(len(obs)):
            w.writerow(
                [int(obs.orbit_id[i]), repr(float(obs.time[i])), repr(float(obs.lat[i])),
                 repr(float(obs.lon[i])), repr(float(vals[i]))]
            )
