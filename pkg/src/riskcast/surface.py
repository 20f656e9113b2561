"""Rasterized relative-risk surfaces and cluster descriptive statistics.

Scan results become R x C grids of relative risk (baseline cells hold 1.0)
on a fixed lat/lon box; areas use the spherical-rectangle approximation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .domain import _readonly
from .geo import EARTH_RADIUS_KM
from .scan import Cluster, ScanResult

BASELINE_RR = 1.0

# continental-US default box
DEFAULT_ROWS = 40
DEFAULT_COLS = 80
DEFAULT_BBOX = (24.0, 50.0, -125.0, -66.0)  # lat_min, lat_max, lon_min, lon_max


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Fixed raster over a lat/lon bounding box; row 0 is the northern edge."""

    rows: int
    cols: int
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("grid needs at least 2 rows and 2 cols")
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ValueError("degenerate bounding box")
        if not (-90.0 <= self.lat_min and self.lat_max <= 90.0):
            raise ValueError("latitude bounds outside [-90, 90]")
        if not (-180.0 <= self.lon_min and self.lon_max <= 180.0):
            raise ValueError("longitude bounds outside [-180, 180]")

    @property
    def dlat(self) -> float:
        return (self.lat_max - self.lat_min) / self.rows

    @property
    def dlon(self) -> float:
        return (self.lon_max - self.lon_min) / self.cols

    def centroids(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) mesh of cell-centroid latitudes and longitudes."""
        lat = self.lat_max - (np.arange(self.rows) + 0.5) * self.dlat
        lon = self.lon_min + (np.arange(self.cols) + 0.5) * self.dlon
        return np.meshgrid(lat, lon, indexing="ij")


DEFAULT_GRID = GridSpec(DEFAULT_ROWS, DEFAULT_COLS, *DEFAULT_BBOX)


@dataclass(frozen=True, eq=False)
class RiskGrid:
    """Relative-risk surface for one interval on a shared GridSpec."""

    spec: GridSpec
    values: np.ndarray
    interval_index: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.spec.rows, self.spec.cols):
            raise ValueError(
                f"values shape {values.shape} != grid shape {(self.spec.rows, self.spec.cols)}"
            )
        if not np.isfinite(values).all():
            raise ValueError("risk grid contains non-finite values")
        if (values < 0).any():
            raise ValueError("risk grid contains negative values")
        object.__setattr__(self, "values", _readonly(values))


@dataclass(frozen=True, slots=True)
class TransitionStats:
    """Cell-area flows between high/low classes of two consecutive grids.

    Each percentage pair is (share of the source interval's class area,
    share of the destination interval's class area); None when the
    corresponding class area is zero.
    """

    from_interval: int
    to_interval: int
    high_high_area: float
    low_low_area: float
    high_low_area: float
    low_high_area: float
    high_high_pct: tuple[float | None, float | None]
    low_low_pct: tuple[float | None, float | None]
    high_low_pct: tuple[float | None, float | None]
    low_high_pct: tuple[float | None, float | None]


def cell_area_km2(spec: GridSpec, row: int, col: int) -> float:
    """Spherical-rectangle area of one cell: R^2 * dlon_rad * (sin top - sin bottom)."""
    if not (0 <= row < spec.rows and 0 <= col < spec.cols):
        raise IndexError(f"cell ({row}, {col}) outside {spec.rows}x{spec.cols} grid")
    lat_top = spec.lat_max - row * spec.dlat
    lat_bottom = lat_top - spec.dlat
    return (EARTH_RADIUS_KM ** 2) * math.radians(spec.dlon) * (
        math.sin(math.radians(lat_top)) - math.sin(math.radians(lat_bottom))
    )


def cell_areas(spec: GridSpec) -> np.ndarray:
    """Per-cell areas (km^2) as a (rows, cols) array."""
    rows = np.arange(spec.rows)
    lat_top = np.radians(spec.lat_max - rows * spec.dlat)
    lat_bottom = np.radians(spec.lat_max - (rows + 1) * spec.dlat)
    band = (EARTH_RADIUS_KM ** 2) * math.radians(spec.dlon) * (np.sin(lat_top) - np.sin(lat_bottom))
    return np.repeat(band[:, None], spec.cols, axis=1)


def _ranked_clusters(scan: ScanResult, region) -> list[Cluster]:
    # deterministic precedence: llr desc, then center id, then direction
    return sorted(
        scan.clusters,
        key=lambda c: (-c.llr, region.locations[c.window.center].id, c.direction),
    )


def _coverage_mask(cluster: Cluster, spec: GridSpec, region) -> np.ndarray:
    center = region.locations[cluster.window.center]
    lat_mesh, lon_mesh = spec.centroids()
    # distances from the cluster center to every cell centroid
    phi1 = math.radians(center.lat)
    phi2 = np.radians(lat_mesh)
    dphi = np.radians(lat_mesh - center.lat)
    dlam = np.radians(lon_mesh - center.lon)
    s = np.sin(dphi / 2.0) ** 2 + math.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    dist = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(s, 0.0, 1.0)))
    return dist <= cluster.window.radius_km


def rasterize(scan: ScanResult, spec: GridSpec, region) -> RiskGrid:
    """Paint each cell with the covering cluster of largest LLR.

    A cell centroid inside several significant cluster circles takes the
    relative risk of the highest-LLR one; uncovered cells stay at the
    baseline 1.0.
    """
    values = np.full((spec.rows, spec.cols), BASELINE_RR, dtype=np.float64)
    assigned = np.zeros((spec.rows, spec.cols), dtype=bool)
    for cluster in _ranked_clusters(scan, region):
        mask = _coverage_mask(cluster, spec, region) & ~assigned
        values[mask] = cluster.relative_risk
        assigned |= mask
    return RiskGrid(spec=spec, values=values, interval_index=scan.interval.index)


@dataclass(frozen=True, slots=True)
class IntervalSummary:
    """Per-interval cluster counts and risk areas (Table-2-style row)."""

    interval_index: int
    n_high_clusters: int
    n_low_clusters: int
    high_area_km2: float
    low_area_km2: float
    overlap_area_km2: float
    total_area_km2: float
    high_area_pct: float
    low_area_pct: float
    overlap_area_pct: float
    total_area_pct: float


def descriptive_stats(scan: ScanResult, grid: RiskGrid, region) -> IntervalSummary:
    """Counts and areas of high/low risk plus raw circle-overlap area.

    High/low areas come from the rasterized grid (value above/below 1);
    the overlap area counts cells covered by both a high and a low circle
    before LLR precedence is applied. Percentages are relative to the
    whole grid area.
    """
    areas = cell_areas(grid.spec)
    total_grid = float(areas.sum())
    high_area = float(areas[grid.values > BASELINE_RR].sum())
    low_area = float(areas[grid.values < BASELINE_RR].sum())

    high_cov = np.zeros(grid.values.shape, dtype=bool)
    low_cov = np.zeros(grid.values.shape, dtype=bool)
    for cluster in scan.high_clusters:
        high_cov |= _coverage_mask(cluster, grid.spec, region)
    for cluster in scan.low_clusters:
        low_cov |= _coverage_mask(cluster, grid.spec, region)
    overlap_area = float(areas[high_cov & low_cov].sum())
    total_area = high_area + low_area - overlap_area

    return IntervalSummary(
        interval_index=grid.interval_index,
        n_high_clusters=len(scan.high_clusters),
        n_low_clusters=len(scan.low_clusters),
        high_area_km2=high_area,
        low_area_km2=low_area,
        overlap_area_km2=overlap_area,
        total_area_km2=total_area,
        high_area_pct=100.0 * (high_area / total_grid),
        low_area_pct=100.0 * (low_area / total_grid),
        overlap_area_pct=100.0 * (overlap_area / total_grid),
        total_area_pct=100.0 * (total_area / total_grid),
    )


def transition_stats(grid_a: RiskGrid, grid_b: RiskGrid) -> TransitionStats:
    """Area flows between the high/low classes of two grids on one spec."""
    if grid_a.spec != grid_b.spec:
        raise ValueError("transition stats need grids on the same GridSpec")
    areas = cell_areas(grid_a.spec)
    high_a = grid_a.values > BASELINE_RR
    low_a = grid_a.values < BASELINE_RR
    high_b = grid_b.values > BASELINE_RR
    low_b = grid_b.values < BASELINE_RR

    hh = float(areas[high_a & high_b].sum())
    ll = float(areas[low_a & low_b].sum())
    hl = float(areas[high_a & low_b].sum())
    lh = float(areas[low_a & high_b].sum())

    src_high = float(areas[high_a].sum())
    src_low = float(areas[low_a].sum())
    dst_high = float(areas[high_b].sum())
    dst_low = float(areas[low_b].sum())

    def pct(area, src, dst):
        return (
            100.0 * (area / src) if src > 0 else None,
            100.0 * (area / dst) if dst > 0 else None,
        )

    return TransitionStats(
        from_interval=grid_a.interval_index,
        to_interval=grid_b.interval_index,
        high_high_area=hh,
        low_low_area=ll,
        high_low_area=hl,
        low_high_area=lh,
        high_high_pct=pct(hh, src_high, dst_high),
        low_low_pct=pct(ll, src_low, dst_low),
        high_low_pct=pct(hl, src_high, dst_low),
        low_high_pct=pct(lh, src_low, dst_high),
    )


# --- serialization ---------------------------------------------------------

def grid_to_csv(grid: RiskGrid) -> str:
    """Headerless CSV, one line per grid row."""
    return "\n".join(",".join(repr(float(v)) for v in row) for row in grid.values) + "\n"


def grid_sidecar(grid: RiskGrid) -> str:
    d = {
        "rows": grid.spec.rows,
        "cols": grid.spec.cols,
        "lat_min": grid.spec.lat_min,
        "lat_max": grid.spec.lat_max,
        "lon_min": grid.spec.lon_min,
        "lon_max": grid.spec.lon_max,
        "interval_index": grid.interval_index,
    }
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def grid_from_csv(csv_text: str, sidecar_text: str) -> RiskGrid:
    meta = json.loads(sidecar_text)
    spec = GridSpec(
        rows=meta["rows"], cols=meta["cols"],
        lat_min=meta["lat_min"], lat_max=meta["lat_max"],
        lon_min=meta["lon_min"], lon_max=meta["lon_max"],
    )
    values = np.array([
        [float(cell) for cell in line.split(",")]
        for line in csv_text.strip().splitlines()
    ])
    return RiskGrid(spec=spec, values=values, interval_index=meta["interval_index"])


def summary_to_dict(s: IntervalSummary) -> dict:
    return {
        "interval_index": s.interval_index,
        "n_high_clusters": s.n_high_clusters,
        "n_low_clusters": s.n_low_clusters,
        "high_area_km2": s.high_area_km2,
        "low_area_km2": s.low_area_km2,
        "overlap_area_km2": s.overlap_area_km2,
        "total_area_km2": s.total_area_km2,
        "high_area_pct": s.high_area_pct,
        "low_area_pct": s.low_area_pct,
        "overlap_area_pct": s.overlap_area_pct,
        "total_area_pct": s.total_area_pct,
    }


def transition_to_dict(t: TransitionStats) -> dict:
    return {
        "from_interval": t.from_interval,
        "to_interval": t.to_interval,
        "high_high_area_km2": t.high_high_area,
        "low_low_area_km2": t.low_low_area,
        "high_low_area_km2": t.high_low_area,
        "low_high_area_km2": t.low_high_area,
        "high_high_pct": list(t.high_high_pct),
        "low_low_pct": list(t.low_low_pct),
        "high_low_pct": list(t.high_low_pct),
        "low_high_pct": list(t.low_high_pct),
    }
