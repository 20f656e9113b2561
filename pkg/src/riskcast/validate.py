"""Dispersion and fit metrics for observed and predicted risk surfaces."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .forecast import (
    REGRESSION,
    SMOOTHING,
    RiskSequence,
    _as_matrix,
    exp_smooth,
    mlr_fit,
    optimize_alpha,
    predict_next,
    sse_distance,
)

BALANCED = "balanced"


@dataclass(frozen=True, slots=True)
class IntervalStat:
    label: str
    mean: float
    sd: float
    cv_percent: float | None


@dataclass(frozen=True, slots=True)
class ModelScore:
    name: str
    r_squared: float | None
    mse: float


@dataclass(frozen=True, eq=False)
class ValidationReport:
    interval_stats: tuple[IntervalStat, ...]
    models: tuple[ModelScore, ...]
    chosen_corrector: str
    alpha_star: float
    predicted_stats: IntervalStat


def cv_percent(mean: float, sd: float) -> float | None:
    """Coefficient of variation, SD/mean * 100; None when the mean is zero."""
    if mean == 0:
        return None
    return sd / mean * 100.0


def cv_stats(grid) -> tuple[float, float, float | None]:
    """(mean, sample SD, CV%) over all cells of a grid."""
    values = _as_matrix(grid).ravel()
    if values.size == 0:
        raise ValueError("empty grid")
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, sd, cv_percent(mean, sd)


def fit_metrics(predicted, observed) -> tuple[float | None, float]:
    """(R^2, MSE) of a predicted grid against the observed one.

    R^2 = 1 - SSE/SST with SST the observed cells' total squared deviation
    from their mean; None when the observed grid is constant (SST = 0).
    """
    pred = _as_matrix(predicted)
    obs = _as_matrix(observed)
    if pred.shape != obs.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {obs.shape}")
    sse = sse_distance(pred, obs)
    sst = float(np.sum((obs - obs.mean()) ** 2))
    mse = sse / obs.size
    if sst == 0.0:
        return None, mse
    return 1.0 - sse / sst, mse


def compare_models(seq: RiskSequence, observed_next, grid_step: float = 0.01) -> ValidationReport:
    """Score the balanced forecast against pure regression and pure smoothing.

    The pure-smoothing baseline re-optimizes its own alpha and extends its
    recursion one level past k; pure regression reuses the level-k corrected
    grid as its next-interval prediction. All three are scored on R^2/MSE
    against the held-out grid, alongside per-interval CV rows.
    """
    obs = _as_matrix(observed_next)
    if obs.shape != seq.shape:
        raise ValueError(f"held-out grid shape {obs.shape} != sequence shape {seq.shape}")

    result = predict_next(seq, grid_step)
    mats = seq.matrices
    k = len(mats)

    pure_reg = mlr_fit(seq).corrected
    alpha_es = optimize_alpha(seq, grid_step)
    smoothed_k = exp_smooth(seq, alpha_es)[-1]
    pure_es = alpha_es * mats[-1] + (1.0 - alpha_es) * smoothed_k

    models = []
    for name, pred in ((BALANCED, result.predicted), (REGRESSION, pure_reg), (SMOOTHING, pure_es)):
        r2, mse = fit_metrics(pred, obs)
        models.append(ModelScore(name=name, r_squared=r2, mse=mse))

    stats = []
    for i, mat in enumerate(mats, start=1):
        mean, sd, cv = cv_stats(mat)
        stats.append(IntervalStat(label=f"T{i}", mean=mean, sd=sd, cv_percent=cv))
    mean, sd, cv = cv_stats(obs)
    stats.append(IntervalStat(label=f"T{k + 1}", mean=mean, sd=sd, cv_percent=cv))

    pmean, psd, pcv = cv_stats(result.predicted)
    predicted_stats = IntervalStat(label=f"T{k + 1}*", mean=pmean, sd=psd, cv_percent=pcv)

    return ValidationReport(
        interval_stats=tuple(stats),
        models=tuple(models),
        chosen_corrector=result.chosen_method,
        alpha_star=result.alpha_star,
        predicted_stats=predicted_stats,
    )


def report_to_dict(report: ValidationReport) -> dict:
    def stat(s: IntervalStat) -> dict:
        return {"label": s.label, "mean": s.mean, "sd": s.sd, "cv_percent": s.cv_percent}

    return {
        "interval_stats": [stat(s) for s in report.interval_stats],
        "models": [
            {"name": m.name, "r_squared": m.r_squared, "mse": m.mse} for m in report.models
        ],
        "chosen_corrector": report.chosen_corrector,
        "alpha_star": report.alpha_star,
        "predicted_stats": stat(report.predicted_stats),
    }


def report_to_json(report: ValidationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def report_to_text(report: ValidationReport) -> str:
    """Human-readable validation tables."""
    lines = []
    lines.append("Interval dispersion")
    lines.append(f"{'interval':>10} {'mean':>10} {'sd':>10} {'cv_%':>10}")
    for s in list(report.interval_stats) + [report.predicted_stats]:
        cv = f"{s.cv_percent:.4f}" if s.cv_percent is not None else "n/a"
        lines.append(f"{s.label:>10} {s.mean:>10.4f} {s.sd:>10.4f} {cv:>10}")
    lines.append("")
    lines.append(f"Model comparison (alpha*={report.alpha_star:g}, "
                 f"corrector={report.chosen_corrector})")
    lines.append(f"{'model':>28} {'r_squared':>12} {'mse':>12}")
    for m in report.models:
        r2 = f"{m.r_squared:.6f}" if m.r_squared is not None else "n/a"
        lines.append(f"{m.name:>28} {r2:>12} {m.mse:>12.6f}")
    return "\n".join(lines) + "\n"
