import math

import numpy as np
import pytest

from riskcast.domain import StudyRegion
from riskcast.scan import CandidateWindow, Cluster, ScanResult
from riskcast.surface import (
    GridSpec,
    RiskGrid,
    cell_area_km2,
    cell_areas,
    descriptive_stats,
    grid_from_csv,
    grid_sidecar,
    grid_to_csv,
    rasterize,
    transition_stats,
)

from conftest import interval, make_location


def test_grid_spec_validation():
    with pytest.raises(ValueError, match="at least 2"):
        GridSpec(1, 10, 0.0, 10.0, 0.0, 10.0)
    with pytest.raises(ValueError, match="degenerate"):
        GridSpec(4, 4, 10.0, 10.0, 0.0, 10.0)
    with pytest.raises(ValueError, match="latitude"):
        GridSpec(4, 4, -95.0, 10.0, 0.0, 10.0)


def test_equatorial_one_degree_cell():
    # frozen from a direct evaluation of R^2 * dlon * (sin top - sin bottom)
    spec = GridSpec(rows=2, cols=2, lat_min=-1.0, lat_max=1.0, lon_min=0.0, lon_max=2.0)
    area = cell_area_km2(spec, 0, 0)  # the [0,1] degree band
    assert area == pytest.approx(12364, abs=1)
    assert area == pytest.approx(12363.718145180048, rel=1e-12)


def test_same_band_cells_equal():
    spec = GridSpec(rows=5, cols=6, lat_min=20.0, lat_max=45.0, lon_min=-110.0, lon_max=-80.0)
    for row in range(5):
        areas = [cell_area_km2(spec, row, col) for col in range(6)]
        assert len(set(areas)) == 1


def test_area_shrinks_toward_pole():
    spec = GridSpec(rows=61, cols=2, lat_min=0.0, lat_max=61.0, lon_min=0.0, lon_max=2.0)
    equator = cell_area_km2(spec, 60, 0)  # [0, 1) degrees
    at_60 = cell_area_km2(spec, 0, 0)     # [60, 61) degrees
    assert at_60 < equator
    assert at_60 / equator == pytest.approx(math.cos(math.radians(60.5)), rel=0.02)


def test_total_area_matches_box():
    spec = GridSpec(rows=13, cols=29, lat_min=24.0, lat_max=50.0, lon_min=-125.0, lon_max=-66.0)
    total = cell_areas(spec).sum()
    from riskcast.geo import EARTH_RADIUS_KM

    box = (EARTH_RADIUS_KM ** 2) * math.radians(59.0) * (
        math.sin(math.radians(50.0)) - math.sin(math.radians(24.0)))
    assert total == pytest.approx(box, rel=1e-6)


# --- rasterization -----------------------------------------------------------


def two_loc_region():
    return StudyRegion([
        make_location(0, 40.0, -100.0, 1000, id_="A"),
        make_location(1, 30.0, -80.0, 1000, id_="B"),
    ])


def cluster_at(region, center, rr, llr, radius_km, direction, rank=1):
    window = CandidateWindow(center=center, members=frozenset([center]),
                             radius_km=radius_km, window_population=1000)
    return Cluster(window=window, observed=10, expected=5.0, llr=llr,
                   relative_risk=rr, p_value=0.001, direction=direction, rank=rank)


def scan_with(region, high=(), low=()):
    return ScanResult(interval=interval(), high_clusters=tuple(high),
                      low_clusters=tuple(low), replications=999, seed=0,
                      significance=0.05)


SPEC = GridSpec(rows=10, cols=20, lat_min=25.0, lat_max=49.0, lon_min=-120.0, lon_max=-70.0)


def test_rasterize_no_clusters_is_all_ones():
    region = two_loc_region()
    grid = rasterize(scan_with(region), SPEC, region)
    assert np.all(grid.values == 1.0)


def test_rasterize_single_cluster_paints_covered_cells():
    region = two_loc_region()
    scan = scan_with(region, high=[cluster_at(region, 0, rr=2.0, llr=12.0, radius_km=150.0,
                                              direction="high")])
    grid = rasterize(scan, SPEC, region)
    painted = grid.values == 2.0
    assert painted.sum() >= 1
    assert np.all(grid.values[~painted] == 1.0)
    # painted cells are those whose centroid lies inside the circle
    from riskcast.geo import haversine_km

    lat_mesh, lon_mesh = SPEC.centroids()
    for r in range(SPEC.rows):
        for c in range(SPEC.cols):
            d = haversine_km((40.0, -100.0), (lat_mesh[r, c], lon_mesh[r, c]))
            assert painted[r, c] == (d <= 150.0)


def test_rasterize_llr_precedence():
    region = two_loc_region()
    hi = cluster_at(region, 0, rr=2.1, llr=12.0, radius_km=400.0, direction="high")
    lo = cluster_at(region, 0, rr=0.5, llr=9.0, radius_km=400.0, direction="low")
    grid = rasterize(scan_with(region, high=[hi], low=[lo]), SPEC, region)
    covered = grid.values != 1.0
    assert covered.any()
    assert np.all(grid.values[covered] == 2.1)


def test_rasterize_invariant_to_cluster_order():
    region = StudyRegion([
        make_location(0, 40.0, -100.0, 1000, id_="A"),
        make_location(1, 38.0, -96.0, 1000, id_="B"),
        make_location(2, 30.0, -80.0, 1000, id_="C"),
    ])
    # overlapping circles with distinct llr so precedence matters
    a = cluster_at(region, 0, rr=2.1, llr=12.0, radius_km=600.0, direction="high")
    b = cluster_at(region, 1, rr=1.5, llr=7.0, radius_km=600.0, direction="high", rank=2)
    c = cluster_at(region, 2, rr=0.5, llr=9.0, radius_km=600.0, direction="low")
    g1 = rasterize(scan_with(region, high=[a, b], low=[c]), SPEC, region)
    g2 = rasterize(scan_with(region, high=[b, a], low=[c]), SPEC, region)
    assert np.array_equal(g1.values, g2.values)
    # both llr levels actually painted somewhere
    assert (g1.values == 2.1).any() and (g1.values == 1.5).any() and (g1.values == 0.5).any()


def test_risk_grid_rejects_bad_values():
    with pytest.raises(ValueError, match="non-finite"):
        RiskGrid(spec=SPEC, values=np.full((10, 20), np.nan), interval_index=1)
    with pytest.raises(ValueError, match="negative"):
        RiskGrid(spec=SPEC, values=np.full((10, 20), -0.5), interval_index=1)
    with pytest.raises(ValueError, match="shape"):
        RiskGrid(spec=SPEC, values=np.ones((3, 3)), interval_index=1)


# --- descriptive statistics --------------------------------------------------


def test_descriptive_stats_all_baseline():
    region = two_loc_region()
    scan = scan_with(region)
    grid = rasterize(scan, SPEC, region)
    stats = descriptive_stats(scan, grid, region)
    assert stats.high_area_km2 == 0.0
    assert stats.low_area_km2 == 0.0
    assert stats.overlap_area_km2 == 0.0
    assert stats.n_high_clusters == 0 and stats.n_low_clusters == 0


def test_descriptive_stats_single_cluster_area():
    region = two_loc_region()
    scan = scan_with(region, high=[cluster_at(region, 0, 2.0, 12.0, 300.0, "high")])
    grid = rasterize(scan, SPEC, region)
    stats = descriptive_stats(scan, grid, region)
    areas = cell_areas(SPEC)
    assert stats.high_area_km2 == pytest.approx(float(areas[grid.values == 2.0].sum()))
    assert stats.low_area_km2 == 0.0
    assert stats.overlap_area_km2 == 0.0
    assert stats.total_area_km2 == pytest.approx(stats.high_area_km2)


def test_descriptive_stats_disjoint_high_low_no_overlap():
    region = two_loc_region()
    scan = scan_with(
        region,
        high=[cluster_at(region, 0, 2.0, 12.0, 300.0, "high")],
        low=[cluster_at(region, 1, 0.5, 8.0, 300.0, "low")],
    )
    grid = rasterize(scan, SPEC, region)
    stats = descriptive_stats(scan, grid, region)
    assert stats.overlap_area_km2 == 0.0
    assert stats.n_high_clusters == 1 and stats.n_low_clusters == 1


def test_descriptive_overlap_counts_raw_circles():
    # high and low circles share cells; precedence paints them high, but
    # the overlap area still reports the raw double coverage
    region = two_loc_region()
    hi = cluster_at(region, 0, 2.1, 12.0, 400.0, "high")
    lo = cluster_at(region, 0, 0.5, 9.0, 400.0, "low")
    scan = scan_with(region, high=[hi], low=[lo])
    grid = rasterize(scan, SPEC, region)
    stats = descriptive_stats(scan, grid, region)
    assert stats.low_area_km2 == 0.0
    assert stats.overlap_area_km2 > 0.0
    assert stats.overlap_area_km2 == pytest.approx(stats.high_area_km2)


def test_partition_into_high_low_baseline(rng):
    spec = GridSpec(rows=6, cols=7, lat_min=30.0, lat_max=42.0, lon_min=-100.0, lon_max=-86.0)
    values = rng.choice([0.5, 1.0, 2.0], size=(6, 7))
    grid = RiskGrid(spec=spec, values=values, interval_index=1)
    areas = cell_areas(spec)
    high = float(areas[grid.values > 1.0].sum())
    low = float(areas[grid.values < 1.0].sum())
    base = float(areas[grid.values == 1.0].sum())
    assert high + low + base == pytest.approx(float(areas.sum()), rel=1e-6)


# --- transitions -------------------------------------------------------------


def grid_of(values, index):
    spec = GridSpec(rows=len(values), cols=len(values[0]),
                    lat_min=30.0, lat_max=40.0, lon_min=-100.0, lon_max=-90.0)
    return RiskGrid(spec=spec, values=np.asarray(values, dtype=float), interval_index=index)


def test_transition_identical_grids_have_no_flips():
    g = grid_of([[2.0, 1.0], [0.5, 1.0]], 1)
    h = grid_of([[2.0, 1.0], [0.5, 1.0]], 2)
    t = transition_stats(g, h)
    assert t.high_low_area == 0.0
    assert t.low_high_area == 0.0
    assert t.high_high_area > 0.0
    assert t.low_low_area > 0.0
    assert t.high_high_pct == (100.0, 100.0)


def test_transition_full_flip():
    g = grid_of([[2.0, 2.0], [2.0, 2.0]], 1)
    h = grid_of([[0.5, 0.5], [0.5, 0.5]], 2)
    t = transition_stats(g, h)
    areas = cell_areas(g.spec)
    assert t.high_low_area == pytest.approx(float(areas.sum()))
    assert t.high_high_area == 0.0
    assert t.low_low_area == 0.0
    assert t.low_high_area == 0.0
    # no high cells in the destination, no low cells in the source
    assert t.high_high_pct == (0.0, None)
    assert t.low_high_pct == (None, None)
    assert t.high_low_pct == (100.0, 100.0)


def test_transition_matches_cell_tally(rng):
    spec = GridSpec(rows=8, cols=9, lat_min=28.0, lat_max=44.0, lon_min=-114.0, lon_max=-96.0)
    a = RiskGrid(spec=spec, values=rng.choice([0.4, 1.0, 1.7], size=(8, 9)), interval_index=1)
    b = RiskGrid(spec=spec, values=rng.choice([0.6, 1.0, 2.2], size=(8, 9)), interval_index=2)
    t = transition_stats(a, b)
    areas = cell_areas(spec)

    def tally(mask_a, mask_b):
        total = 0.0
        for r in range(8):
            for c in range(9):
                if mask_a[r, c] and mask_b[r, c]:
                    total += areas[r, c]
        return total

    assert t.high_high_area == pytest.approx(tally(a.values > 1, b.values > 1))
    assert t.low_low_area == pytest.approx(tally(a.values < 1, b.values < 1))
    assert t.high_low_area == pytest.approx(tally(a.values > 1, b.values < 1))
    assert t.low_high_area == pytest.approx(tally(a.values < 1, b.values > 1))
    # source-side containment
    assert t.high_high_area + t.high_low_area <= float(areas[a.values > 1].sum()) + 1e-9


def test_transition_requires_same_spec():
    a = grid_of([[1.0, 2.0]] * 2, 1)
    spec = GridSpec(rows=2, cols=2, lat_min=30.0, lat_max=41.0, lon_min=-100.0, lon_max=-90.0)
    b = RiskGrid(spec=spec, values=np.ones((2, 2)), interval_index=2)
    with pytest.raises(ValueError, match="same GridSpec"):
        transition_stats(a, b)


def test_grid_csv_roundtrip(rng):
    spec = GridSpec(rows=4, cols=5, lat_min=30.0, lat_max=40.0, lon_min=-100.0, lon_max=-90.0)
    grid = RiskGrid(spec=spec, values=rng.uniform(0.2, 2.5, size=(4, 5)), interval_index=3)
    back = grid_from_csv(grid_to_csv(grid), grid_sidecar(grid))
    assert back.spec == grid.spec
    assert back.interval_index == 3
    assert np.array_equal(back.values, grid.values)
