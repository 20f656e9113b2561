"""CSV ingestion: population roster, cumulative case series, interval slicing."""
from __future__ import annotations

import bisect
import csv
import logging
from datetime import date

import numpy as np

from .domain import IntervalCounts, Location, StudyRegion, validate_intervals

logger = logging.getLogger(__name__)

POPULATION_HEADER = ["id", "name", "lat", "lon", "population", "land_area_km2"]
CASES_HEADER = ["date", "id", "cases"]


class IngestError(ValueError):
    """Malformed or inconsistent input data."""


def _rows(path) -> list[tuple[int, list[str]]]:
    """CSV rows with their 1-based file line numbers, comments skipped."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            out.append((lineno, [cell.strip() for cell in row]))
    if not out:
        raise IngestError(f"{path}: no data rows")
    return out


def _check_header(path, row, expected):
    if [c.lower() for c in row] != expected:
        raise IngestError(f"{path}: expected header {','.join(expected)!r}, got {','.join(row)!r}")


def load_population(path) -> StudyRegion:
    """Load a `id,name,lat,lon,population,land_area_km2` roster into a StudyRegion."""
    rows = _rows(path)
    _check_header(path, rows[0][1], POPULATION_HEADER)
    locations = []
    seen: set[str] = set()
    for lineno, row in rows[1:]:
        if len(row) != len(POPULATION_HEADER):
            raise IngestError(f"{path}:{lineno}: expected {len(POPULATION_HEADER)} fields, got {len(row)}")
        loc_id, name, lat_s, lon_s, pop_s, area_s = row
        if loc_id in seen:
            raise IngestError(f"{path}:{lineno}: duplicate location id {loc_id!r}")
        seen.add(loc_id)
        try:
            loc = Location(
                id=loc_id,
                name=name,
                lat=float(lat_s),
                lon=float(lon_s),
                population=int(pop_s),
                land_area_km2=float(area_s),
            )
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from exc
        locations.append(loc)
    return StudyRegion(locations)


def load_cases(path, region: StudyRegion) -> dict[str, list[tuple[date, int]]]:
    """Load a `date,id,cases` CSV of cumulative counts into per-location series.

    ``cases`` is the cumulative count to date (NYT convention). Rows may
    arrive in any date order; each returned series is sorted by date, with a
    later row for the same (id, date) replacing the earlier one. Ids must
    belong to ``region``.
    """
    rows = _rows(path)
    _check_header(path, rows[0][1], CASES_HEADER)
    by_loc: dict[str, dict[date, int]] = {loc.id: {} for loc in region.locations}
    for lineno, row in rows[1:]:
        if len(row) != 3:
            raise IngestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        date_s, loc_id, cases_s = row
        if loc_id not in by_loc:
            raise IngestError(f"{path}:{lineno}: unknown location id {loc_id!r}")
        try:
            day = date.fromisoformat(date_s)
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: unparsable date {date_s!r}") from exc
        try:
            cases = int(cases_s)
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: unparsable case count {cases_s!r}") from exc
        if cases < 0:
            raise IngestError(f"{path}:{lineno}: negative case count {cases}")
        by_loc[loc_id][day] = cases
    return {loc_id: sorted(series.items()) for loc_id, series in by_loc.items()}


def _cum_before(series: list[tuple[date, int]], day: date) -> int:
    """Last cumulative value strictly before ``day`` (0 if none)."""
    idx = bisect.bisect_left(series, (day,))
    return series[idx - 1][1] if idx > 0 else 0


def slice_intervals(series: dict[str, list[tuple[date, int]]],
                    intervals, region: StudyRegion) -> list[IntervalCounts]:
    """Convert cumulative series into per-interval incident counts.

    For interval [s, e) a location's count is cum(e-) - cum(s-), where
    cum(d-) is the last cumulative value strictly before d. Negative
    increments (upstream data corrections) clamp to 0 and are tallied in
    the interval's ``clamped`` counter.
    """
    intervals = validate_intervals(intervals)
    out = []
    for spec in intervals:
        observed = np.zeros(len(region), dtype=np.int64)
        clamped = 0
        for i, loc in enumerate(region.locations):
            s = series.get(loc.id, [])
            diff = _cum_before(s, spec.end_date) - _cum_before(s, spec.start_date)
            if diff < 0:
                clamped += 1
                diff = 0
            observed[i] = diff
        if clamped:
            logger.warning(
                "interval %d: clamped %d negative increment(s) to zero", spec.index, clamped
            )
        out.append(IntervalCounts.from_observed(region, spec, observed, clamped=clamped))
    return out
