"""End-to-end orchestration shared by the CLI subcommands.

All writers produce deterministic bytes: fixed key order, repr floats,
no timestamps. Scan artifacts on disk are reused when present so
`forecast` and `report` can run after `scan` without recomputing.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

from . import scan as scan_mod
from . import surface, svg
from .config import RunConfig, config_to_toml
from .domain import IntervalCounts, StudyRegion
from .forecast import ForecastResult, RiskSequence, forecast_to_json, predict_next
from .ingest import load_cases, load_population, slice_intervals
from .validate import ValidationReport, compare_models, report_to_json, report_to_text

logger = logging.getLogger(__name__)


class InputError(Exception):
    """User-correctable problem: bad config, missing file, malformed data."""


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_inputs(cfg: RunConfig) -> tuple[StudyRegion, list[IntervalCounts]]:
    try:
        region = load_population(cfg.population_path)
    except (OSError, ValueError) as exc:
        raise InputError(f"ingest (population {cfg.population_path}): {exc}") from exc
    try:
        series = load_cases(cfg.cases_path, region)
        counts = slice_intervals(series, cfg.intervals, region)
    except (OSError, ValueError) as exc:
        raise InputError(f"ingest (cases {cfg.cases_path}): {exc}") from exc
    return region, counts


def scan_path(cfg: RunConfig, interval_index: int) -> Path:
    return Path(cfg.output_dir) / f"scan_{interval_index}.json"


def compute_scans(cfg: RunConfig, region: StudyRegion,
                  counts: list[IntervalCounts]) -> list[scan_mod.ScanResult]:
    windows = scan_mod.enumerate_windows(region, cfg.max_fraction)
    results = []
    for c in counts:
        logger.info("scanning interval %d (N=%d)", c.interval.index, c.total_observed)
        results.append(scan_mod.run_scan(
            region, c, windows,
            replications=cfg.replications,
            significance=cfg.significance,
            seed=cfg.seed,
            workers=cfg.workers,
        ))
    return results


def load_or_compute_scans(cfg: RunConfig, region: StudyRegion,
                          counts: list[IntervalCounts]) -> list[scan_mod.ScanResult]:
    paths = [scan_path(cfg, c.interval.index) for c in counts]
    if all(p.exists() for p in paths):
        logger.info("reusing %d scan files from %s", len(paths), cfg.output_dir)
        try:
            return [
                scan_mod.scan_result_from_dict(json.loads(p.read_text(encoding="utf-8")), region)
                for p in paths
            ]
        except (KeyError, ValueError) as exc:
            raise InputError(f"scan artifacts in {cfg.output_dir} are unreadable: {exc}") from exc
    return compute_scans(cfg, region, counts)


def write_effective_config(cfg: RunConfig):
    _write(Path(cfg.output_dir) / "config_used.toml", config_to_toml(cfg))


def cmd_scan(cfg: RunConfig) -> list[scan_mod.ScanResult]:
    """Write scan_<k>.json and clusters_<k>.csv per interval."""
    region, counts = load_inputs(cfg)
    results = compute_scans(cfg, region, counts)
    for res in results:
        _write(scan_path(cfg, res.interval.index), scan_mod.scan_result_to_json(res, region))
        _write(Path(cfg.output_dir) / f"clusters_{res.interval.index}.csv",
               scan_mod.clusters_to_csv(res, region))
    write_effective_config(cfg)
    return results


def rasterize_all(cfg: RunConfig, region: StudyRegion,
                  scans: list[scan_mod.ScanResult]) -> list[surface.RiskGrid]:
    return [surface.rasterize(s, cfg.grid, region) for s in scans]


def _matrix_sidecar(cfg: RunConfig, interval_index: int) -> str:
    d = {
        "rows": cfg.grid.rows,
        "cols": cfg.grid.cols,
        "lat_min": cfg.grid.lat_min,
        "lat_max": cfg.grid.lat_max,
        "lon_min": cfg.grid.lon_min,
        "lon_max": cfg.grid.lon_max,
        "interval_index": interval_index,
    }
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _matrix_csv(values) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in values) + "\n"


def cmd_forecast(cfg: RunConfig) -> tuple[ForecastResult, ValidationReport]:
    """Hold out the final interval, predict it, and write forecast artifacts."""
    if len(cfg.intervals) < 4:
        raise InputError(
            f"forecast needs at least 4 intervals (3 to fit the recursion plus a holdout); "
            f"config has {len(cfg.intervals)}"
        )
    region, counts = load_inputs(cfg)
    scans = load_or_compute_scans(cfg, region, counts)
    grids = rasterize_all(cfg, region, scans)
    seq = RiskSequence(grids[:-1])
    observed = grids[-1]

    result = predict_next(seq, cfg.grid_step)
    report = compare_models(seq, observed, cfg.grid_step)

    out = Path(cfg.output_dir)
    _write(out / "forecast.json", forecast_to_json(result))
    _write(out / "predicted_grid.csv", _matrix_csv(result.predicted))
    _write(out / "predicted_grid.json", _matrix_sidecar(cfg, observed.interval_index))
    _write(out / "observed_grid.csv", surface.grid_to_csv(observed))
    _write(out / "observed_grid.json", surface.grid_sidecar(observed))
    _write(out / "validation.json", report_to_json(report))
    _write(out / "validation.txt", report_to_text(report))
    balanced = report.models[0]
    _write(out / "forecast_scatter.svg",
           svg.scatter_svg(result.predicted, observed, balanced.r_squared))
    write_effective_config(cfg)
    return result, report


TABLE2_HEADER = ("interval,n_high,n_low,high_area_km2,high_area_pct,low_area_km2,low_area_pct,"
                 "overlap_area_km2,overlap_area_pct,total_area_km2,total_area_pct")
TABLE3_HEADER = ("from_interval,to_interval,"
                 "high_high_area_km2,high_high_pct_src,high_high_pct_dst,"
                 "low_low_area_km2,low_low_pct_src,low_low_pct_dst,"
                 "high_low_area_km2,high_low_pct_src,high_low_pct_dst,"
                 "low_high_area_km2,low_high_pct_src,low_high_pct_dst")


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def cmd_report(cfg: RunConfig) -> tuple[list[surface.IntervalSummary], list[surface.TransitionStats]]:
    """Write per-interval descriptive tables, transitions, and choropleths."""
    region, counts = load_inputs(cfg)
    scans = load_or_compute_scans(cfg, region, counts)
    grids = rasterize_all(cfg, region, scans)

    summaries = [surface.descriptive_stats(s, g, region) for s, g in zip(scans, grids)]
    transitions = [surface.transition_stats(a, b) for a, b in zip(grids, grids[1:])]

    out = Path(cfg.output_dir)
    rows = [TABLE2_HEADER]
    for s in summaries:
        rows.append(",".join([
            str(s.interval_index), str(s.n_high_clusters), str(s.n_low_clusters),
            repr(s.high_area_km2), repr(s.high_area_pct),
            repr(s.low_area_km2), repr(s.low_area_pct),
            repr(s.overlap_area_km2), repr(s.overlap_area_pct),
            repr(s.total_area_km2), repr(s.total_area_pct),
        ]))
    _write(out / "table2.csv", "\n".join(rows) + "\n")
    _write(out / "descriptive.json", json.dumps(
        [surface.summary_to_dict(s) for s in summaries], indent=2, sort_keys=True) + "\n")

    rows = [TABLE3_HEADER]
    for t in transitions:
        rows.append(",".join([
            str(t.from_interval), str(t.to_interval),
            repr(t.high_high_area), _fmt(t.high_high_pct[0]), _fmt(t.high_high_pct[1]),
            repr(t.low_low_area), _fmt(t.low_low_pct[0]), _fmt(t.low_low_pct[1]),
            repr(t.high_low_area), _fmt(t.high_low_pct[0]), _fmt(t.high_low_pct[1]),
            repr(t.low_high_area), _fmt(t.low_high_pct[0]), _fmt(t.low_high_pct[1]),
        ]))
    _write(out / "table3.csv", "\n".join(rows) + "\n")
    _write(out / "transitions.json", json.dumps(
        [surface.transition_to_dict(t) for t in transitions], indent=2, sort_keys=True) + "\n")

    for grid in grids:
        _write(out / f"choropleth_{grid.interval_index}.svg",
               svg.choropleth_svg(grid, title=f"interval {grid.interval_index}"))
    write_effective_config(cfg)
    return summaries, transitions


def cmd_validate(cfg: RunConfig) -> ValidationReport:
    """Run the forecast pipeline and emit the validation report."""
    _, report = cmd_forecast(cfg)
    return report
