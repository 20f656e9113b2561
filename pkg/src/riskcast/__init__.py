"""riskcast: spatial cluster-risk scanning and next-interval forecasting.

Pipeline: ingest longitudinal case data, detect significant high/low
relative-risk clusters per time interval with a Poisson spatial scan and
Monte Carlo testing, rasterize the cluster risks onto a fixed grid, and
forecast the next interval's surface with a predictor-corrector blend of
exponential smoothing and multiple linear regression.
"""

from .domain import IntervalCounts, IntervalSpec, Location, StudyRegion, validate_intervals
from .forecast import (
    CorrectorFit,
    ForecastResult,
    RiskSequence,
    exp_smooth,
    mlr_fit,
    optimize_alpha,
    predict_next,
    seed_regression,
    sse_distance,
)
from .geo import EARTH_RADIUS_KM, haversine_km, neighbor_order
from .ingest import IngestError, load_cases, load_population, slice_intervals
from .scan import (
    CandidateWindow,
    Cluster,
    ScanResult,
    enumerate_windows,
    log_likelihood_ratio,
    monte_carlo_pvalues,
    relative_risk,
    run_scan,
    scan_interval,
    select_significant,
)
from .surface import (
    DEFAULT_GRID,
    GridSpec,
    IntervalSummary,
    RiskGrid,
    TransitionStats,
    cell_area_km2,
    descriptive_stats,
    rasterize,
    transition_stats,
)
from .validate import ValidationReport, compare_models, cv_stats, fit_metrics

__version__ = "0.1.0"

__all__ = [
    "CandidateWindow", "Cluster", "CorrectorFit", "DEFAULT_GRID", "EARTH_RADIUS_KM",
    "ForecastResult", "GridSpec", "IngestError", "IntervalCounts", "IntervalSpec",
    "IntervalSummary", "Location", "RiskGrid", "RiskSequence", "ScanResult",
    "StudyRegion", "TransitionStats", "ValidationReport", "cell_area_km2",
    "compare_models", "cv_stats", "descriptive_stats", "enumerate_windows",
    "exp_smooth", "fit_metrics", "haversine_km", "load_cases", "load_population",
    "log_likelihood_ratio", "mlr_fit", "monte_carlo_pvalues", "neighbor_order",
    "optimize_alpha", "predict_next", "rasterize", "relative_risk", "run_scan",
    "scan_interval", "seed_regression", "select_significant", "slice_intervals",
    "sse_distance", "transition_stats", "validate_intervals",
]
