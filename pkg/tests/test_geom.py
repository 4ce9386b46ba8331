import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axisym.geom import (
    DataError, GeoPoint, ObsTable, Orbit, central_angle, central_angle_deg, chordal_distance,
    chordal_matrix, concat, lon_diff, read_observations, wrap_lon, write_observations,
)

lats = st.floats(-90, 90, allow_nan=False)
lons = st.floats(-720, 720, allow_nan=False)
points = st.builds(GeoPoint, lats, lons)


def haversine_deg(p, q):
    # independent formula for the angle
    f1, f2 = math.radians(p.lat), math.radians(q.lat)
    dl = math.radians(q.lon - p.lon)
    h = math.sin((f2 - f1) / 2) ** 2 + math.cos(f1) * math.cos(f2) * math.sin(dl / 2) ** 2
    return math.degrees(2 * math.asin(min(1.0, math.sqrt(h))))


@given(lons)
def test_wrap_lon_range(l):
    w = wrap_lon(l)
    assert -180 < w <= 180
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(l)), abs_tol=1e-9)


def test_wrap_lon_edges():
    assert wrap_lon(-180.0) == 180.0
    assert wrap_lon(180.0) == 180.0
    assert wrap_lon(540.0) == 180.0
    assert wrap_lon(-190.0) == 170.0


def test_lon_diff_wraps():
    assert lon_diff(170.0, -170.0) == -20.0
    assert lon_diff(-170.0, 170.0) == 20.0
    np.testing.assert_allclose(lon_diff([10.0, 0.0], [0.0, 10.0]), [10.0, -10.0])
    with pytest.raises(ValueError):
        lon_diff(float("nan"), 0.0)


@settings(max_examples=200)
@given(points, points)
def test_angle_symmetric_bounded(p, q):
    a = central_angle(p, q)
    assert 0.0 <= a <= 180.0
    assert a == pytest.approx(central_angle(q, p), abs=1e-12)
    assert a == pytest.approx(haversine_deg(p, q), abs=1e-6)


@settings(max_examples=200)
@given(points, points)
def test_chord_matches_angle(p, q):
    d = chordal_distance(p, q)
    assert 0.0 <= d <= 2.0 + 1e-15
    assert d == pytest.approx(2 * math.sin(math.radians(central_angle(p, q)) / 2), abs=1e-12)


@given(points)
def test_identity_distance_zero(p):
    assert central_angle(p, p) == 0.0
    assert chordal_distance(p, p) == 0.0


def test_antipodes_and_poles():
    assert central_angle(GeoPoint(0, 0), GeoPoint(0, 180)) == pytest.approx(180.0)
    assert chordal_distance(GeoPoint(90, 0), GeoPoint(-90, 0)) == pytest.approx(2.0)
    # longitude is irrelevant at a pole
    assert central_angle(GeoPoint(90, 10), GeoPoint(90, -100)) == pytest.approx(0.0, abs=1e-12)


def test_tiny_separation_is_accurate():
    a = central_angle_deg(10.0, 20.0, 10.0, 20.0 + 1e-9)
    assert a == pytest.approx(1e-9 * math.cos(math.radians(10.0)), rel=1e-6)


def test_geopoint_validation():
    assert GeoPoint(0, 190).lon == -170.0
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(0, float("inf"))


def test_chordal_matrix(rng):
    lat = rng.uniform(-90, 90, 7)
    lon = rng.uniform(-180, 180, 7)
    D = chordal_matrix(lat, lon)
    ref = [[chordal_distance(GeoPoint(a, b), GeoPoint(c, d)) for c, d in zip(lat, lon)]
           for a, b in zip(lat, lon)]
    np.testing.assert_allclose(D, ref, atol=1e-14)
    assert np.all(np.diag(D) == 0)


def test_obstable_validation_and_immutability():
    t = ObsTable([0, 0], [1.0, 2.0], [10.0, 20.0], [190.0, 0.0], [0.1, 0.2])
    assert t.lon[0] == -170.0
    with pytest.raises(AttributeError):
        t.value = np.zeros(2)
    with pytest.raises(ValueError):
        t.value[0] = 1.0
    with pytest.raises(ValueError):
        ObsTable([0], [0.0], [95.0], [0.0], [0.0])
    with pytest.raises(ValueError):
        ObsTable([0, 1], [0.0], [0.0], [0.0], [0.0])


def test_orbits_split_and_sorted():
    t = ObsTable([2, 1, 2, 1], [5.0, 3.0, 1.0, 2.0], [0, 1, 2, 3], [0, 0, 0, 0], [1, 2, 3, 4])
    orbs = t.orbits()
    assert [o.orbit_id for o in orbs] == [1, 2]
    assert list(orbs[0].obs.time) == [2.0, 3.0]
    assert list(orbs[1].obs.value) == [3.0, 1.0]
    with pytest.raises(ValueError):
        Orbit(1, t)
    assert len(concat(orbs)) == 4


def test_records_roundtrip():
    t = ObsTable([0, 3], [1.5, 2.5], [-10.0, 20.0], [5.0, -6.0], [0.1, -0.2])
    back = ObsTable.from_records(list(t))
    for k in ObsTable.__slots__:
        np.testing.assert_array_equal(getattr(back, k), getattr(t, k))


def test_file_roundtrip(tmp_path, rng):
    n = 25
    t = ObsTable(rng.integers(0, 3, n), rng.uniform(0, 1e4, n), rng.uniform(-90, 90, n),
                 rng.uniform(-180, 180, n), rng.normal(5.6, 0.1, n))
    write_observations(tmp_path / "log.tsv", t)
    back = read_observations(tmp_path / "log.tsv")
    for k in ObsTable.__slots__:
        np.testing.assert_array_equal(getattr(back, k), getattr(t, k))
    write_observations(tmp_path / "raw.tsv", t, raw=True)
    raw = read_observations(tmp_path / "raw.tsv")
    np.testing.assert_allclose(raw.value, t.value, rtol=1e-15)


def test_comma_delimited_raw_is_logged(tmp_path):
    p = tmp_path / "raw.csv"
    p.write_text("orbit_id,time_s,lat_deg,lon_deg,ozone_du\n0,0,10,20,300\n")
    t = read_observations(p)
    assert t.value[0] == pytest.approx(math.log(300.0))


@pytest.mark.parametrize("body, line", [
    ("0\t0\t10\t20\tabc\n", 2),
    ("0\t0\t10\t20\t300\n0\t0\t95\t20\t300\n", 3),
    ("0\t0\t10\t20\t-5\n", 2),
    ("0\t0\t10\n", 2),
    ("-1\t0\t10\t20\t300\n", 2),
])
def test_bad_rows_report_line(tmp_path, body, line):
    p = tmp_path / "bad.tsv"
    p.write_text("orbit_id\ttime_s\tlat_deg\tlon_deg\tozone_du\n" + body)
    with pytest.raises(DataError, match=f"line {line}"):
        read_observations(p)


def test_bad_header(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("a\tb\n1\t2\n")
    with pytest.raises(DataError, match="line 1"):
        read_observations(p)
