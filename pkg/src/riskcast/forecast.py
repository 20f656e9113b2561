"""Predictor-corrector forecast of the next interval's risk surface.

The next grid is a convex combination alpha* T_k + (1 - alpha*) T_k^*,
where the corrected estimate T_k^* comes from whichever of exponential
smoothing or multiple linear regression reconstructs the latest observed
grid with the smaller sum of squared errors. alpha* minimizes the
cumulative SSE of the smoothing recursion over levels 3..k.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

SMOOTHING = "exponential_smoothing"
REGRESSION = "multiple_linear_regression"

DEFAULT_GRID_STEP = 0.01
_RIDGE_LAMBDA = 1e-8
_COND_LIMIT = 1e12


def _as_matrix(grid) -> np.ndarray:
    """Accept a RiskGrid or a bare 2D array."""
    values = getattr(grid, "values", grid)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {arr.shape}")
    return arr


class RiskSequence:
    """Ordered grids T_1..T_k sharing one shape, k >= 3."""

    def __init__(self, grids):
        mats = [_as_matrix(g) for g in grids]
        if len(mats) < 3:
            raise ValueError(f"need at least 3 grids, got {len(mats)}")
        shape = mats[0].shape
        for i, m in enumerate(mats[1:], start=2):
            if m.shape != shape:
                raise ValueError(f"grid {i} has shape {m.shape}, expected {shape}")
        self.grids = grids
        self.matrices = mats
        self.shape = shape

    def __len__(self):
        return len(self.matrices)


@dataclass(frozen=True, eq=False)
class CorrectorFit:
    """One corrector's reconstruction of the latest grid.

    ``coefficients`` is (alpha,) for smoothing and (a_0, a_1, ..., a_{k-1})
    for regression.
    """

    method: str
    coefficients: tuple[float, ...]
    corrected: np.ndarray
    sse: float


@dataclass(frozen=True, eq=False)
class ForecastResult:
    predicted: np.ndarray
    alpha_star: float
    chosen_method: str
    smoothing_fit: CorrectorFit
    regression_fit: CorrectorFit
    seed_regression: tuple[float, float]

    @property
    def chosen_fit(self) -> CorrectorFit:
        return self.regression_fit if self.chosen_method == REGRESSION else self.smoothing_fit


def sse_distance(a, b) -> float:
    """Sum of squared elementwise differences between two same-shape grids."""
    am, bm = _as_matrix(a), _as_matrix(b)
    if am.shape != bm.shape:
        raise ValueError(f"shape mismatch: {am.shape} vs {bm.shape}")
    diff = am - bm
    return float(np.sum(diff * diff))


def seed_regression(t1, t2) -> tuple[float, float, np.ndarray]:
    """Simple OLS of T_2 cells on T_1 cells: (intercept, slope, fitted grid).

    A constant T_1 degenerates to slope 0 with intercept mean(T_2).
    """
    x = _as_matrix(t1)
    y = _as_matrix(t2)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    xf, yf = x.ravel(), y.ravel()
    if np.all(xf == xf[0]):
        intercept, slope = float(yf.mean()), 0.0
    else:
        xbar, ybar = xf.mean(), yf.mean()
        slope = float(np.sum((xf - xbar) * (yf - ybar)) / np.sum((xf - xbar) ** 2))
        intercept = float(ybar - slope * xbar)
    return intercept, slope, intercept + slope * x


def exp_smooth(seq: RiskSequence, alpha: float) -> list[np.ndarray]:
    """Smoothing recursion seeded by the T_1->T_2 regression estimate.

    Returns the smoothed grids for levels 3..k:
    level 3 is alpha T_2 + (1 - alpha) T-hat_2, and each later level i is
    alpha T_{i-1} + (1 - alpha) (previous smoothed level).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    mats = seq.matrices
    _, _, seed = seed_regression(mats[0], mats[1])
    levels = []
    prev = seed
    for i in range(2, len(mats)):  # level i+1 uses observed T_i (0-based mats[i-1])
        prev = alpha * mats[i - 1] + (1.0 - alpha) * prev
        levels.append(prev)
    return levels


def mlr_fit(seq: RiskSequence) -> CorrectorFit:
    """Least-squares reconstruction of T_k from T_1..T_{k-1}.

    Each cell is one observation; the coefficients are scalars applied to
    whole grids. Solved by normal equations, falling back to a small ridge
    penalty (1e-8, intercept unpenalized) when the Gram matrix is singular.
    """
    mats = seq.matrices
    k = len(mats)
    n_cells = mats[0].size
    if n_cells < k:
        raise ValueError(f"{n_cells} cells cannot support {k} coefficients")
    target = mats[-1].ravel()
    design = np.column_stack([np.ones(n_cells)] + [m.ravel() for m in mats[:-1]])
    gram = design.T @ design
    rhs = design.T @ target
    if np.linalg.cond(gram) < _COND_LIMIT:
        coef = np.linalg.solve(gram, rhs)
    else:
        penalty = np.eye(k)
        penalty[0, 0] = 0.0  # leave the intercept unpenalized
        coef = np.linalg.solve(gram + _RIDGE_LAMBDA * penalty, rhs)
    corrected = (design @ coef).reshape(seq.shape)
    return CorrectorFit(
        method=REGRESSION,
        coefficients=tuple(float(c) for c in coef),
        corrected=corrected,
        sse=sse_distance(corrected, mats[-1]),
    )


def smoothing_objective(seq: RiskSequence, alpha: float) -> float:
    """Cumulative SSE of the smoothing recursion against T_3..T_k."""
    mats = seq.matrices
    return sum(sse_distance(level, mats[i])
               for i, level in zip(range(2, len(mats)), exp_smooth(seq, alpha)))


def optimize_alpha(seq: RiskSequence, grid_step: float = DEFAULT_GRID_STEP) -> float:
    """Grid-search alpha in {0, step, ..., 1}; ties go to the smallest alpha."""
    if not 0.0 < grid_step <= 1.0:
        raise ValueError(f"grid_step must be in (0, 1], got {grid_step}")
    n_steps = round(1.0 / grid_step)
    if not math.isclose(n_steps * grid_step, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"grid_step {grid_step} must divide 1")
    best_alpha, best_val = 0.0, None
    for i in range(n_steps + 1):
        alpha = min(i * grid_step, 1.0)
        val = smoothing_objective(seq, alpha)
        if best_val is None or val < best_val:
            best_alpha, best_val = alpha, val
    return best_alpha


def smoothing_fit(seq: RiskSequence, alpha: float) -> CorrectorFit:
    """CorrectorFit for the smoothing recursion evaluated at one alpha."""
    corrected = exp_smooth(seq, alpha)[-1]
    return CorrectorFit(
        method=SMOOTHING,
        coefficients=(alpha,),
        corrected=corrected,
        sse=sse_distance(corrected, seq.matrices[-1]),
    )


def predict_next(seq: RiskSequence, grid_step: float = DEFAULT_GRID_STEP) -> ForecastResult:
    """Convex-combination forecast of T_{k+1}.

    Computes alpha*, reconstructs T_k with both correctors, keeps the one
    with the smaller SSE (ties go to regression), and returns
    alpha* T_k + (1 - alpha*) corrected.
    """
    alpha_star = optimize_alpha(seq, grid_step)
    es_fit = smoothing_fit(seq, alpha_star)
    reg_fit = mlr_fit(seq)
    chosen = reg_fit if reg_fit.sse <= es_fit.sse else es_fit
    t_k = seq.matrices[-1]
    predicted = alpha_star * t_k + (1.0 - alpha_star) * chosen.corrected
    intercept, slope, _ = seed_regression(seq.matrices[0], seq.matrices[1])
    return ForecastResult(
        predicted=predicted,
        alpha_star=alpha_star,
        chosen_method=chosen.method,
        smoothing_fit=es_fit,
        regression_fit=reg_fit,
        seed_regression=(intercept, slope),
    )


def forecast_to_dict(result: ForecastResult) -> dict:
    return {
        "alpha_star": result.alpha_star,
        "chosen_method": result.chosen_method,
        "seed_regression": {
            "intercept": result.seed_regression[0],
            "slope": result.seed_regression[1],
        },
        "smoothing": {
            "alpha": result.smoothing_fit.coefficients[0],
            "sse": result.smoothing_fit.sse,
        },
        "regression": {
            "coefficients": list(result.regression_fit.coefficients),
            "sse": result.regression_fit.sse,
        },
    }


def forecast_to_json(result: ForecastResult) -> str:
    return json.dumps(forecast_to_dict(result), indent=2, sort_keys=True) + "\n"
