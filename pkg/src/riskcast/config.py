"""Run configuration: TOML file plus command-line overrides (flags win)."""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .domain import IntervalSpec, validate_intervals
from .surface import DEFAULT_GRID, GridSpec
from .synthetic import default_intervals


class ConfigError(ValueError):
    """Invalid or missing run configuration."""


_KNOWN_KEYS = {
    "population", "cases", "output_dir", "seed", "max_fraction", "replications",
    "significance", "grid_step", "workers", "grid_rows", "grid_cols",
    "lat_min", "lat_max", "lon_min", "lon_max", "intervals",
}


@dataclass(frozen=True)
class RunConfig:
    population_path: Path
    cases_path: Path
    intervals: tuple[IntervalSpec, ...]
    max_fraction: float = 0.25
    replications: int = 999
    significance: float = 0.05
    grid: GridSpec = DEFAULT_GRID
    grid_step: float = 0.01
    seed: int = 0
    output_dir: Path = Path("out")
    workers: int = 1


def _parse_intervals(raw) -> tuple[IntervalSpec, ...]:
    specs = []
    for i, pair in enumerate(raw, start=1):
        if len(pair) != 2:
            raise ConfigError(f"interval {i}: expected [start, end], got {pair!r}")
        try:
            start, end = date.fromisoformat(str(pair[0])), date.fromisoformat(str(pair[1]))
        except ValueError as exc:
            raise ConfigError(f"interval {i}: {exc}") from exc
        specs.append(IntervalSpec(index=i, start_date=start, end_date=end))
    try:
        return tuple(validate_intervals(specs))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    """Parse a TOML config.

    Relative input paths resolve against the config file's directory;
    a relative output_dir stays relative to the working directory.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("population", "cases"):
        if key not in raw:
            raise ConfigError(f"{path}: missing required key {key!r}")

    base = path.parent

    def respath(p):
        p = Path(p)
        return p if p.is_absolute() else (base / p)

    try:
        grid = GridSpec(
            rows=int(raw.get("grid_rows", DEFAULT_GRID.rows)),
            cols=int(raw.get("grid_cols", DEFAULT_GRID.cols)),
            lat_min=float(raw.get("lat_min", DEFAULT_GRID.lat_min)),
            lat_max=float(raw.get("lat_max", DEFAULT_GRID.lat_max)),
            lon_min=float(raw.get("lon_min", DEFAULT_GRID.lon_min)),
            lon_max=float(raw.get("lon_max", DEFAULT_GRID.lon_max)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    intervals = (_parse_intervals(raw["intervals"]) if "intervals" in raw
                 else tuple(default_intervals()))

    cfg = RunConfig(
        population_path=respath(raw["population"]),
        cases_path=respath(raw["cases"]),
        intervals=intervals,
        max_fraction=float(raw.get("max_fraction", 0.25)),
        replications=int(raw.get("replications", 999)),
        significance=float(raw.get("significance", 0.05)),
        grid=grid,
        grid_step=float(raw.get("grid_step", 0.01)),
        seed=int(raw.get("seed", 0)),
        output_dir=Path(raw.get("output_dir", "out")),
        workers=int(raw.get("workers", 1)),
    )
    return validate_config(cfg)


def validate_config(cfg: RunConfig) -> RunConfig:
    if not 0 < cfg.max_fraction <= 1:
        raise ConfigError(f"max_fraction must be in (0, 1], got {cfg.max_fraction}")
    if cfg.replications < 1:
        raise ConfigError(f"replications must be >= 1, got {cfg.replications}")
    if not 0 < cfg.significance <= 1:
        raise ConfigError(f"significance must be in (0, 1], got {cfg.significance}")
    if not 0 < cfg.grid_step <= 1:
        raise ConfigError(f"grid_step must be in (0, 1], got {cfg.grid_step}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    if not cfg.intervals:
        raise ConfigError("at least one interval required")
    return cfg


def apply_overrides(cfg: RunConfig, *, seed=None, out=None, replications=None,
                    grid_step=None, max_fraction=None, workers=None) -> RunConfig:
    """Apply command-line flag overrides; flags win over file values."""
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if out is not None:
        updates["output_dir"] = Path(out)
    if replications is not None:
        updates["replications"] = replications
    if grid_step is not None:
        updates["grid_step"] = grid_step
    if max_fraction is not None:
        updates["max_fraction"] = max_fraction
    if workers is not None:
        updates["workers"] = workers
    return validate_config(replace(cfg, **updates)) if updates else cfg


def config_to_toml(cfg: RunConfig) -> str:
    """Serialize the effective configuration; re-running it reproduces outputs.

    Only output-determining settings are recorded: the worker count is an
    execution knob that never changes results, so it is deliberately left out.
    """
    lines = [
        f'population = "{cfg.population_path.as_posix()}"',
        f'cases = "{cfg.cases_path.as_posix()}"',
        f'output_dir = "{cfg.output_dir.as_posix()}"',
        f"seed = {cfg.seed}",
        f"max_fraction = {cfg.max_fraction!r}",
        f"replications = {cfg.replications}",
        f"significance = {cfg.significance!r}",
        f"grid_step = {cfg.grid_step!r}",
        f"grid_rows = {cfg.grid.rows}",
        f"grid_cols = {cfg.grid.cols}",
        f"lat_min = {cfg.grid.lat_min!r}",
        f"lat_max = {cfg.grid.lat_max!r}",
        f"lon_min = {cfg.grid.lon_min!r}",
        f"lon_max = {cfg.grid.lon_max!r}",
        "intervals = [",
    ]
    for spec in cfg.intervals:
        lines.append(f'  ["{spec.start_date.isoformat()}", "{spec.end_date.isoformat()}"],')
    lines.append("]")
    return "\n".join(lines) + "\n"
