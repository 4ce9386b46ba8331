import numpy as np
import pytest

from axisym.geom import ObsTable
from axisym.simulate import random_sphere_points, simulate_values


@pytest.fixture
def rng():
    return np.random.default_rng(20260517)


def obs_from(lat, lon, values, orbit_id=0):
    n = len(lat)
    return ObsTable(np.full(n, orbit_id), np.arange(n, dtype=float), lat, lon, values)


def simulated_obs(model, n, rng, seed=0, lat_range=(-90.0, 90.0)):
    lat, lon = random_sphere_points(n, rng, lat_range)
    return obs_from(lat, lon, simulate_values(model, lat, lon, seed))
