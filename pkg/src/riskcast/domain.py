"""Core data model: locations, study regions, intervals, and per-interval counts.

Everything here is immutable after construction so instances can be shared
freely across parallel workers.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np


@dataclass(frozen=True, slots=True)
class Location:
    """One geographic unit (e.g. a county centroid)."""

    id: str
    name: str
    lat: float
    lon: float
    population: int
    land_area_km2: float

    def __post_init__(self):
        if not self.id:
            raise ValueError("location id must be non-empty")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range for location {self.id!r}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of range for location {self.id!r}")
        if self.population < 0:
            raise ValueError(f"negative population for location {self.id!r}")
        if self.land_area_km2 < 0:
            raise ValueError(f"negative land area for location {self.id!r}")


class StudyRegion:
    """Ordered collection of locations with cached coordinate/population arrays."""

    def __init__(self, locations):
        locations = tuple(locations)
        if len(locations) < 2:
            raise ValueError("a study region needs at least 2 locations")
        seen = set()
        for loc in locations:
            if loc.id in seen:
                raise ValueError(f"duplicate location id {loc.id!r}")
            seen.add(loc.id)
        self._locations = locations
        self._index = {loc.id: i for i, loc in enumerate(locations)}
        self._lats = _readonly(np.array([loc.lat for loc in locations], dtype=float))
        self._lons = _readonly(np.array([loc.lon for loc in locations], dtype=float))
        self._pops = _readonly(np.array([loc.population for loc in locations], dtype=np.int64))
        self._total_population = int(self._pops.sum())

    @property
    def locations(self) -> tuple[Location, ...]:
        return self._locations

    @property
    def total_population(self) -> int:
        return self._total_population

    @property
    def lats(self) -> np.ndarray:
        return self._lats

    @property
    def lons(self) -> np.ndarray:
        return self._lons

    @property
    def populations(self) -> np.ndarray:
        return self._pops

    def index_of(self, location_id: str) -> int:
        return self._index[location_id]

    def __len__(self):
        return len(self._locations)

    def __repr__(self):
        return f"StudyRegion({len(self._locations)} locations, pop {self._total_population})"


@dataclass(frozen=True, slots=True)
class IntervalSpec:
    """Half-open calendar interval [start_date, end_date), 1-based index."""

    index: int
    start_date: date
    end_date: date

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("interval index is 1-based")
        if not self.start_date < self.end_date:
            raise ValueError(
                f"interval {self.index}: start {self.start_date} must precede end {self.end_date}"
            )


def validate_intervals(intervals) -> tuple[IntervalSpec, ...]:
    """Check that intervals abut exactly (interval i's end = interval i+1's start)."""
    intervals = tuple(intervals)
    if not intervals:
        raise ValueError("empty interval list")
    for a, b in zip(intervals, intervals[1:]):
        if a.end_date != b.start_date:
            raise ValueError(
                f"intervals {a.index} and {b.index} do not abut: {a.end_date} != {b.start_date}"
            )
    return intervals


@dataclass(frozen=True, eq=False)
class IntervalCounts:
    """Observed and expected case counts per location for one interval.

    Expected counts follow the uniform-risk allocation: each location gets
    the share of the interval's total cases proportional to its population,
    so total expected equals total observed.

    ``clamped`` counts the locations whose raw increment was negative (a
    cumulative-data correction) and was clamped to zero.
    """

    interval: IntervalSpec
    observed: np.ndarray
    expected: np.ndarray
    total_observed: int
    total_expected: float
    clamped: int = 0

    @classmethod
    def from_observed(cls, region: StudyRegion, interval: IntervalSpec,
                      observed, clamped: int = 0) -> "IntervalCounts":
        observed = np.asarray(observed, dtype=np.int64)
        if observed.shape != (len(region),):
            raise ValueError("observed counts must have one entry per location")
        if (observed < 0).any():
            raise ValueError("observed counts must be nonnegative")
        if region.total_population <= 0:
            raise ValueError("region total population must be positive to allocate expectations")
        total = int(observed.sum())
        expected = total * (region.populations / region.total_population)
        return cls(
            interval=interval,
            observed=_readonly(observed),
            expected=_readonly(expected),
            total_observed=total,
            total_expected=float(expected.sum()),
            clamped=clamped,
        )


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr
