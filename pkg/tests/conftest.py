from datetime import date

import numpy as np
import pytest

from riskcast.domain import IntervalCounts, IntervalSpec, Location, StudyRegion


def make_location(i, lat, lon, population, id_=None):
    return Location(
        id=id_ or f"L{i:03d}",
        name=f"loc {i}",
        lat=lat,
        lon=lon,
        population=population,
        land_area_km2=100.0,
    )


def random_region(rng, n, pop_range=(1_000, 200_000), box=(30.0, 45.0, -110.0, -80.0)):
    lat_min, lat_max, lon_min, lon_max = box
    return StudyRegion([
        make_location(
            i,
            lat=float(rng.uniform(lat_min, lat_max)),
            lon=float(rng.uniform(lon_min, lon_max)),
            population=int(rng.integers(*pop_range)),
        )
        for i in range(n)
    ])


def interval(index=1, start="2020-01-01", end="2020-02-01"):
    return IntervalSpec(index=index, start_date=date.fromisoformat(start),
                        end_date=date.fromisoformat(end))


def counts_for(region, observed, index=1):
    return IntervalCounts.from_observed(region, interval(index=index), np.asarray(observed))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def square_region():
    # four equal-population corners of a small box
    return StudyRegion([
        make_location(0, 35.0, -100.0, 10_000),
        make_location(1, 35.0, -99.0, 10_000),
        make_location(2, 36.0, -100.0, 10_000),
        make_location(3, 36.0, -99.0, 10_000),
    ])
