"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured figure of merit. Heavy statistical
criteria run on fixed master seeds so the suite is deterministic."""
import json
import math
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sp_stats

from riskcast.config import apply_overrides, load_config
from riskcast.domain import StudyRegion
from riskcast.forecast import (
    RiskSequence,
    exp_smooth,
    mlr_fit,
    optimize_alpha,
    predict_next,
    seed_regression,
    smoothing_objective,
)
from riskcast.geo import haversine_km
from riskcast.pipeline import cmd_forecast, cmd_report, cmd_scan
from riskcast.scan import enumerate_windows, monte_carlo_pvalues, scan_interval, select_significant
from riskcast.synthetic import build_region, planted_counts
from riskcast.validate import cv_percent, cv_stats

from conftest import counts_for, make_location, random_region

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "riskcast" / "data"


def report_line(number, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number}: {status} - {detail}")
    assert ok, detail


# --- 1. LLR oracle equivalence -------------------------------------------------


def oracle_llr(n_c, mu_c, n_total, direction):
    """Independent textbook evaluation of the Poisson scan log ratio."""
    if not 0 < mu_c < n_total:
        return 0.0
    if direction == "high" and n_c <= mu_c:
        return 0.0
    if direction == "low" and n_c >= mu_c:
        return 0.0
    total = 0.0
    if n_c > 0:
        total += n_c * math.log(n_c / mu_c)
    if n_total - n_c > 0:
        total += (n_total - n_c) * math.log((n_total - n_c) / (n_total - mu_c))
    return total


def oracle_windows(region, max_fraction):
    cap = max_fraction * region.total_population
    seen = {}
    for c in range(len(region)):
        pt = (region.lats[c], region.lons[c])
        dist = [haversine_km(pt, (region.lats[j], region.lons[j]))
                for j in range(len(region))]
        order = sorted(range(len(region)),
                       key=lambda j: (dist[j], j != c, region.locations[j].id))
        members, pop = [], 0
        for j in order:
            pop += region.locations[j].population
            if pop > cap:
                break
            members.append(j)
            seen.setdefault(frozenset(members), True)
    return set(seen)


def all_compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in all_compositions(total - head, parts - 1):
            yield (head,) + rest


def check_instance(region, observed, max_fraction):
    counts = counts_for(region, observed)
    windows = enumerate_windows(region, max_fraction)
    assert {w.members for w in windows} == oracle_windows(region, max_fraction)
    n_total = counts.total_observed
    for direction in ("high", "low"):
        best, scored = scan_interval(counts, windows, region, direction)
        llrs = [s.llr for s in scored]
        assert llrs == sorted(llrs, reverse=True)
        for s in scored:
            n_c = sum(int(observed[i]) for i in s.window.members)
            mu_c = sum(float(counts.expected[i]) for i in s.window.members)
            want = oracle_llr(n_c, mu_c, n_total, direction)
            assert abs(s.llr - want) <= 1e-9, (s.window.members, s.llr, want)
        if scored:
            assert abs(best - max(llrs)) <= 1e-9


def test_acceptance_1_llr_brute_force_equivalence():
    start = time.perf_counter()
    checked = 0
    # exhaustive battery: all ways to spread 6 cases over 3 locations
    region3 = StudyRegion([
        make_location(0, 35.0, -100.0, 1),
        make_location(1, 36.0, -99.0, 2),
        make_location(2, 37.0, -101.0, 3),
    ])
    for comp in all_compositions(6, 3):
        check_instance(region3, np.array(comp), 1.0)
        checked += 1
    # randomized battery up to the size bounds
    master = np.random.default_rng(20240601)
    for _ in range(30):
        n_loc = int(master.integers(2, 7))
        region = random_region(master, n_loc, pop_range=(1, 30))
        n_total = int(master.integers(1, 41))
        observed = master.multinomial(n_total, np.ones(n_loc) / n_loc)
        max_fraction = float(master.choice([0.3, 0.6, 1.0]))
        check_instance(region, observed, max_fraction)
        checked += 1
    elapsed = time.perf_counter() - start
    report_line(1, elapsed < 5.0,
                f"{checked} instances match the exhaustive oracle within 1e-9 "
                f"({elapsed:.2f}s < 5s)")


# --- 2. null calibration --------------------------------------------------------


def test_acceptance_2_null_calibration():
    start = time.perf_counter()
    master = 20240602
    region = random_region(np.random.default_rng(master), 20, pop_range=(20_000, 120_000))
    windows = enumerate_windows(region, 0.25)
    n_total = 2000
    probs = region.populations / region.total_population
    replications = 199
    pvals = np.empty(500)
    for s in range(500):
        observed = np.random.default_rng((master, 5000 + s)).multinomial(n_total, probs)
        counts = counts_for(region, observed)
        _, scored = scan_interval(counts, windows, region, "high")
        p = monte_carlo_pvalues(counts, scored, region, "high",
                                replications=replications, seed=s)
        pvals[s] = p[0]
    ks = sp_stats.kstest(pvals, "uniform").statistic
    fpr = float((pvals < 0.05).mean())
    elapsed = time.perf_counter() - start
    report_line(2, ks < 0.08 and 0.03 <= fpr <= 0.07 and elapsed < 120.0,
                f"KS={ks:.4f} (<0.08), FPR={fpr:.3f} in [0.03, 0.07] "
                f"({elapsed:.1f}s < 120s)")


# --- 3. planted-cluster recovery -------------------------------------------------


def test_acceptance_3_planted_hotspot_recovery():
    start = time.perf_counter()
    region = build_region()
    windows = enumerate_windows(region, 0.25)
    hot = frozenset(range(15, 20))  # one full town of 5
    multipliers = np.ones(len(region))
    multipliers[15:20] = 2.0
    hits = 0
    for s in range(100):
        observed = planted_counts(region, multipliers, 5000,
                                  np.random.default_rng((20240603, s)))
        counts = counts_for(region, observed)
        _, scored = scan_interval(counts, windows, region, "high")
        pvals = monte_carlo_pvalues(counts, scored, region, "high",
                                    replications=999, seed=s)
        clusters = select_significant(scored, pvals, counts.total_observed, "high", 0.05)
        if (clusters and clusters[0].rank == 1
                and clusters[0].window.members == hot
                and clusters[0].p_value == pytest.approx(0.001)):
            hits += 1
    elapsed = time.perf_counter() - start
    report_line(3, hits >= 95 and elapsed < 120.0,
                f"hot spot recovered as rank-1 with p=0.001 in {hits}/100 seeds "
                f"(>=95) ({elapsed:.1f}s < 120s)")


# --- 4. smoothing recursion endpoints --------------------------------------------


def test_acceptance_4_smoothing_collapse():
    rng = np.random.default_rng(20240604)
    mats = [rng.uniform(0.5, 1.5, size=(5, 7)) for _ in range(6)]
    seq = RiskSequence(mats)
    _, _, seed = seed_regression(mats[0], mats[1])
    at_zero = exp_smooth(seq, 0.0)
    ok_zero = all(np.array_equal(level, seed) for level in at_zero)
    at_one = exp_smooth(seq, 1.0)
    ok_one = all(np.array_equal(level, mats[i + 1]) for i, level in enumerate(at_one))
    report_line(4, ok_zero and ok_one,
                "alpha=0 collapses every level to the seed estimate exactly; "
                "alpha=1 returns each previous observation exactly")


# --- 5. regression recovery -------------------------------------------------------


def test_acceptance_5_mlr_exact_recovery():
    rng = np.random.default_rng(20240605)
    mats = [rng.uniform(0.5, 1.5, size=(6, 8)) for _ in range(4)]
    coef = (0.12, 0.4, -0.25, 0.8)
    target = coef[0] + coef[1] * mats[0] + coef[2] * mats[1] + coef[3] * mats[2]
    fit = mlr_fit(RiskSequence(mats[:3] + [target]))
    err = max(abs(a - b) for a, b in zip(fit.coefficients, coef))
    report_line(5, err <= 1e-8 and fit.sse < 1e-12,
                f"coefficients recovered within {err:.2e} (<=1e-8), sse={fit.sse:.2e} (<1e-12)")


# --- 6. alpha search vs dense oracle ----------------------------------------------


def test_acceptance_6_alpha_dense_oracle():
    rng = np.random.default_rng(20240606)
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(3, 8))
        mats = [rng.uniform(0.5, 1.5, size=(6, 6)) for _ in range(k)]
        seq = RiskSequence(mats)
        coarse = optimize_alpha(seq, 0.01)
        alphas = [min(i * 0.001, 1.0) for i in range(1001)]
        vals = [smoothing_objective(seq, a) for a in alphas]
        dense = alphas[min(range(1001), key=lambda i: (vals[i], alphas[i]))]
        worst = max(worst, abs(coarse - dense))
    report_line(6, worst <= 0.01 + 1e-9,
                f"worst |coarse - dense| = {worst:.4f} (<= one 0.01 grid step) over 20 sequences")


# --- 7. convex-combination endpoints -----------------------------------------------


def test_acceptance_7_prediction_endpoints():
    rng = np.random.default_rng(20240607)
    # alpha* = 1: persistence-perfect sequence with an unrelated seed
    t1 = rng.uniform(0.5, 1.5, size=(4, 4))
    t2 = rng.uniform(0.5, 1.5, size=(4, 4))
    persistence = predict_next(RiskSequence([t1, t2, t2, t2]))
    ok_one = persistence.alpha_star == 1.0 and np.array_equal(persistence.predicted, t2)

    # alpha* = 0 with the regression corrector winning: forecast IS the corrector
    a1 = rng.uniform(0.8, 1.2, size=(5, 5))
    a2 = rng.uniform(0.8, 1.2, size=(5, 5))
    _, _, seed = seed_regression(a1, a2)
    direction = (a2 - seed).ravel()
    u = (0.1 + 0.3 * a2).ravel()
    eps = u - (u @ direction) / (direction @ direction) * direction
    a4 = seed + eps.reshape(5, 5)
    result = predict_next(RiskSequence([a1, a2, seed.copy(), a4]))
    ok_zero = (result.alpha_star == 0.0
               and result.chosen_method == "multiple_linear_regression"
               and np.array_equal(result.predicted, result.regression_fit.corrected))
    report_line(7, ok_one and ok_zero,
                "alpha*=1 returns the latest grid exactly; alpha*=0 with the "
                "regression winner returns the corrector exactly")


# --- 8. full forecast artifact shape on the bundled dataset --------------------------


def run_bundled_forecast(tmp_path, name):
    cfg = load_config(DATA_DIR / "config.toml")
    cfg = apply_overrides(cfg, out=tmp_path / name)
    cmd_forecast(cfg)
    return (tmp_path / name / "forecast.json").read_bytes()


def test_acceptance_8_bundled_forecast_shape(tmp_path):
    first = run_bundled_forecast(tmp_path, "a")
    second = run_bundled_forecast(tmp_path, "b")
    payload = json.loads(first)
    seed = payload["seed_regression"]
    regression = payload["regression"]
    ok = (
        set(seed) == {"intercept", "slope"}
        and len(regression["coefficients"]) == 6
        and regression["sse"] >= 0.0
        and payload["smoothing"]["sse"] >= 0.0
        and 0.0 <= payload["alpha_star"] <= 1.0
        and payload["chosen_method"] in ("multiple_linear_regression", "exponential_smoothing")
        and first == second
    )
    report_line(8, ok,
                f"bundled 7-interval run emits a 2-coefficient seed regression, "
                f"a 6-coefficient MLR fit, both SSEs, alpha*={payload['alpha_star']}, "
                f"method={payload['chosen_method']}, byte-stable across reruns")


# --- 9. CV formula ---------------------------------------------------------------


def test_acceptance_9_cv_formula():
    printed = [
        (0.85, 0.58, 68.81), (0.94, 0.36, 38.40), (0.77, 0.35, 45.70),
        (1.39, 1.01, 72.46), (0.90, 0.20, 22.53), (0.92, 0.27, 29.64),
        (0.87, 0.28, 32.36), (0.92, 0.27, 29.48),
    ]
    worst = max(abs(cv_percent(mean, sd) - cv) for mean, sd, cv in printed)
    mean, sd, cv = cv_stats(np.array([[1.0, 2.0, 3.0]]))
    exact = (abs(mean - 2.0) < 1e-12 and abs(sd - 1.0) < 1e-12 and abs(cv - 50.0) < 1e-12)
    report_line(9, worst <= 0.7 and exact,
                f"printed CV table reproduced within {worst:.2f} points (<=0.7); "
                f"hand vector exact to 1e-12")


# --- 10. end-to-end determinism ----------------------------------------------------


def run_everything(cfg):
    cmd_scan(cfg)
    cmd_forecast(cfg)
    cmd_report(cfg)
    out = Path(cfg.output_dir)
    tree = {p.relative_to(out).as_posix(): p.read_bytes()
            for p in sorted(out.rglob("*")) if p.is_file()}
    shutil.rmtree(out)
    return tree


def test_acceptance_10_end_to_end_determinism(tmp_path):
    start = time.perf_counter()
    base = load_config(DATA_DIR / "config.toml")
    base = apply_overrides(base, out=tmp_path / "run")
    first = run_everything(base)
    second = run_everything(base)
    parallel = run_everything(apply_overrides(base, workers=3))
    same_files = set(first) == set(second) == set(parallel)
    identical = same_files and all(
        first[k] == second[k] == parallel[k] for k in first
    )
    elapsed = time.perf_counter() - start
    report_line(10, identical,
                f"{len(first)} output files byte-identical across two runs and a "
                f"workers=3 run ({elapsed:.1f}s)")
