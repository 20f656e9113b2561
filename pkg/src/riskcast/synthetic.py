"""Deterministic synthetic study data: 30 locations, 7 intervals, planted clusters.

Six towns of five locations each sit far apart inside the continental-US
box; per-interval risk multipliers drift smoothly so both high- and
low-risk clusters appear and evolve, giving the forecaster real structure.
Everything derives from fixed seeds so regenerated files are byte-identical.
"""
from __future__ import annotations

import argparse
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .domain import IntervalSpec, Location, StudyRegion, validate_intervals

DEFAULT_SEED = 20240501

# (name, lat, lon) of town centers; members scatter within ~1.3 degrees
TOWNS = [
    ("Cascade", 47.0, -120.5),
    ("Mojave", 34.5, -117.5),
    ("Prairie", 41.5, -93.5),
    ("Brazos", 31.5, -97.0),
    ("Hudson", 42.5, -74.5),
    ("Piedmont", 32.5, -83.5),
]
MEMBERS_PER_TOWN = 5

# risk multiplier per (interval, town): every town keeps a clear direction
# (no marginal neutrals, so cluster geometry stays stable across intervals);
# town 0 fades, town 3 rises, the rest drift gently
RR_SCHEDULE = np.array([
    [1.80, 0.50, 0.70, 1.30, 1.25, 0.55],
    [1.70, 0.50, 0.70, 1.40, 1.25, 0.58],
    [1.60, 0.50, 0.70, 1.50, 1.25, 0.61],
    [1.50, 0.50, 0.70, 1.60, 1.25, 0.64],
    [1.40, 0.55, 0.70, 1.70, 1.25, 0.67],
    [1.35, 0.55, 0.70, 1.80, 1.25, 0.70],
    [1.30, 0.60, 0.70, 1.90, 1.25, 0.73],
])

# new cases per capita in each interval
INCIDENCE = [0.004, 0.010, 0.006, 0.009, 0.012, 0.008, 0.007]

# Table-1-style default study intervals
DEFAULT_INTERVAL_DATES = [
    ("2020-05-24", "2020-09-13"),
    ("2020-09-13", "2021-03-14"),
    ("2021-03-14", "2021-06-13"),
    ("2021-06-13", "2021-10-31"),
    ("2021-10-31", "2022-03-13"),
    ("2022-03-13", "2022-10-16"),
    ("2022-10-16", "2023-03-12"),
]


def default_intervals() -> list[IntervalSpec]:
    specs = [
        IntervalSpec(index=i, start_date=date.fromisoformat(s), end_date=date.fromisoformat(e))
        for i, (s, e) in enumerate(DEFAULT_INTERVAL_DATES, start=1)
    ]
    return list(validate_intervals(specs))


def town_of(location_index: int) -> int:
    return location_index // MEMBERS_PER_TOWN


def build_region(seed: int = DEFAULT_SEED) -> StudyRegion:
    """30 synthetic locations in 6 well-separated towns."""
    rng = np.random.default_rng((seed, 0))
    locations = []
    for t, (town_name, lat0, lon0) in enumerate(TOWNS):
        for i in range(MEMBERS_PER_TOWN):
            lat = lat0 + rng.uniform(-2.0, 2.0)
            lon = lon0 + rng.uniform(-2.6, 2.6)
            pop = int(rng.integers(60_000, 240_000))
            area = float(rng.uniform(500.0, 5000.0))
            locations.append(Location(
                id=f"{(t + 1) * 10000 + i + 1:05d}",
                name=f"{town_name} {i + 1}",
                lat=round(lat, 4),
                lon=round(lon, 4),
                population=pop,
                land_area_km2=round(area, 1),
            ))
    region = StudyRegion(locations)
    # keep every town under the scan's default 25% population cap
    pops = region.populations
    for t in range(len(TOWNS)):
        share = pops[t * MEMBERS_PER_TOWN:(t + 1) * MEMBERS_PER_TOWN].sum() / region.total_population
        if share > 0.22:
            raise AssertionError(f"town {t} holds {share:.1%} of population; reseed the generator")
    return region


def location_multipliers(region: StudyRegion, interval_index: int) -> np.ndarray:
    """Per-location risk multiplier for one 1-based interval."""
    return np.array([RR_SCHEDULE[interval_index - 1, town_of(i)] for i in range(len(region))])


def planted_counts(region: StudyRegion, multipliers, total_cases: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts with location weights multiplier * population."""
    weights = np.asarray(multipliers, dtype=float) * region.populations
    return rng.multinomial(total_cases, weights / weights.sum())


def interval_case_draws(region: StudyRegion, seed: int = DEFAULT_SEED) -> list[np.ndarray]:
    """New-case counts per location for each of the seven intervals."""
    draws = []
    for k in range(1, len(INCIDENCE) + 1):
        total = int(round(region.total_population * INCIDENCE[k - 1]))
        rng = np.random.default_rng((seed, k))
        draws.append(planted_counts(region, location_multipliers(region, k), total, rng))
    return draws


def population_csv(region: StudyRegion) -> str:
    lines = ["id,name,lat,lon,population,land_area_km2"]
    for loc in region.locations:
        lines.append(f"{loc.id},{loc.name},{loc.lat},{loc.lon},{loc.population},{loc.land_area_km2}")
    return "\n".join(lines) + "\n"


def cases_csv(region: StudyRegion, seed: int = DEFAULT_SEED) -> str:
    """Cumulative NYT-style rows: a mid-interval partial for most locations
    (exercising sparse series) and a full value the day before each boundary."""
    intervals = default_intervals()
    draws = interval_case_draws(region, seed)
    rng = np.random.default_rng((seed, 9999))
    skip_mid = rng.random((len(intervals), len(region))) < 0.3
    mid_frac = rng.uniform(0.3, 0.7, size=(len(intervals), len(region)))

    rows: list[tuple[date, str, int]] = []
    cumulative = np.zeros(len(region), dtype=np.int64)
    for k, spec in enumerate(intervals):
        mid_day = spec.start_date + (spec.end_date - spec.start_date) / 2
        end_day = spec.end_date - timedelta(days=1)
        for c, loc in enumerate(region.locations):
            if not skip_mid[k, c]:
                partial = cumulative[c] + int(draws[k][c] * mid_frac[k, c])
                rows.append((mid_day, loc.id, partial))
        cumulative += draws[k]
        for c, loc in enumerate(region.locations):
            rows.append((end_day, loc.id, int(cumulative[c])))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = ["date,id,cases"] + [f"{d.isoformat()},{i},{v}" for d, i, v in rows]
    return "\n".join(lines) + "\n"


def config_toml(population_name: str = "population.csv", cases_name: str = "cases.csv") -> str:
    interval_lines = ",\n".join(f'  ["{s}", "{e}"]' for s, e in DEFAULT_INTERVAL_DATES)
    return f"""# synthetic study bundled with riskcast
population = "{population_name}"
cases = "{cases_name}"
output_dir = "out"
seed = 42
max_fraction = 0.25
replications = 999
significance = 0.05
grid_step = 0.01
workers = 1
grid_rows = 40
grid_cols = 80
lat_min = 24.0
lat_max = 50.0
lon_min = -125.0
lon_max = -66.0
intervals = [
{interval_lines}
]
"""


def generate(out_dir, seed: int = DEFAULT_SEED) -> tuple[Path, Path, Path]:
    """Write population.csv, cases.csv and config.toml into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    region = build_region(seed)
    pop_path = out / "population.csv"
    cases_path = out / "cases.csv"
    config_path = out / "config.toml"
    pop_path.write_text(population_csv(region), encoding="utf-8", newline="\n")
    cases_path.write_text(cases_csv(region, seed), encoding="utf-8", newline="\n")
    config_path.write_text(config_toml(), encoding="utf-8", newline="\n")
    return pop_path, cases_path, config_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Regenerate the bundled synthetic dataset")
    parser.add_argument("--out", default="src/riskcast/data", help="output directory")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args(argv)
    paths = generate(args.out, args.seed)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
