"""Poisson circular spatial scan with Monte Carlo significance testing.

One interval is scanned purely spatially: candidate windows are nearest-
neighbor prefixes around each location capped at a fraction of the total
population, each window is scored with the Poisson log likelihood ratio,
and p-values come from multinomial replicates of the uniform-risk null.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import sparse

from .domain import IntervalCounts, IntervalSpec, StudyRegion
from .geo import haversine_km, neighbor_order

Direction = Literal["high", "low"]

DEFAULT_MAX_FRACTION = 0.25
DEFAULT_REPLICATIONS = 999
DEFAULT_SIGNIFICANCE = 0.05

_MC_CHUNK = 128


@dataclass(frozen=True, slots=True)
class CandidateWindow:
    """A circular window: a center plus its k nearest neighbors."""

    center: int
    members: frozenset[int]
    radius_km: float
    window_population: int


@dataclass(frozen=True, eq=False, slots=True)
class ScoredWindow:
    window: CandidateWindow
    observed: int
    expected: float
    llr: float


@dataclass(frozen=True, eq=False, slots=True)
class Cluster:
    window: CandidateWindow
    observed: int
    expected: float
    llr: float
    relative_risk: float
    p_value: float
    direction: Direction
    rank: int


@dataclass(frozen=True, eq=False, slots=True)
class ScanResult:
    interval: IntervalSpec
    high_clusters: tuple[Cluster, ...]
    low_clusters: tuple[Cluster, ...]
    replications: int
    seed: int
    significance: float

    @property
    def clusters(self) -> tuple[Cluster, ...]:
        return self.high_clusters + self.low_clusters


def log_likelihood_ratio(n_c: float, mu_c: float, n_total: float, direction: Direction) -> float:
    """Poisson scan log likelihood ratio for one window.

    With expectations normalized so total expected equals total observed,
    the ratio reduces to n_c*ln(n_c/mu_c) + (N-n_c)*ln((N-n_c)/(N-mu_c)),
    taking 0*ln(0/x) = 0. Returns that value when the window deviates in
    the requested direction (n_c > mu_c for "high", n_c < mu_c for "low"),
    and 0 otherwise.
    """
    if direction not in ("high", "low"):
        raise ValueError(f"direction must be 'high' or 'low', got {direction!r}")
    if not 0 <= n_c <= n_total:
        raise ValueError(f"n_c={n_c} outside [0, N={n_total}]")
    if not 0 < mu_c < n_total:
        raise ValueError(f"mu_c={mu_c} outside the open interval (0, N={n_total})")
    if direction == "high" and not n_c > mu_c:
        return 0.0
    if direction == "low" and not n_c < mu_c:
        return 0.0
    inside = n_c * math.log(n_c / mu_c) if n_c > 0 else 0.0
    rem = n_total - n_c
    outside = rem * math.log(rem / (n_total - mu_c)) if rem > 0 else 0.0
    return inside + outside


def enumerate_windows(region: StudyRegion,
                      max_fraction: float = DEFAULT_MAX_FRACTION) -> list[CandidateWindow]:
    """All nearest-neighbor prefix windows under the population cap.

    For each center, prefixes of its neighbor ordering grow until adding
    the next neighbor would push the window population past
    max_fraction * total_population. Windows whose member set duplicates
    an earlier one are dropped, keeping the smallest radius.
    """
    if not 0 < max_fraction <= 1:
        raise ValueError(f"max_fraction must be in (0, 1], got {max_fraction}")
    orders = neighbor_order(region)
    pops = region.populations
    cap = max_fraction * region.total_population
    best: dict[frozenset[int], CandidateWindow] = {}
    order_of_first_use: list[frozenset[int]] = []
    for center, order in enumerate(orders):
        pop = 0
        members: list[int] = []
        c_pt = (region.lats[center], region.lons[center])
        for j in order:
            pop += int(pops[j])
            if pop > cap:
                break
            members.append(j)
            key = frozenset(members)
            radius = haversine_km(c_pt, (region.lats[j], region.lons[j]))
            window = CandidateWindow(center=center, members=key,
                                     radius_km=radius, window_population=pop)
            prior = best.get(key)
            if prior is None:
                best[key] = window
                order_of_first_use.append(key)
            elif window.radius_km < prior.radius_km:
                best[key] = window
    return [best[key] for key in order_of_first_use]


def _window_matrix(windows: list[CandidateWindow], n_locations: int) -> sparse.csr_matrix:
    """0/1 membership matrix, one row per window."""
    rows, cols = [], []
    for w_idx, w in enumerate(windows):
        for j in w.members:
            rows.append(w_idx)
            cols.append(j)
    data = np.ones(len(rows), dtype=np.float64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(windows), n_locations))


def _llr_array(n: np.ndarray, mu: np.ndarray, n_total: float, direction: Direction) -> np.ndarray:
    """Vectorized log likelihood ratio; invalid or wrong-direction windows get 0."""
    n = np.asarray(n, dtype=np.float64)
    inside = np.where(n > 0, n * np.log(np.where(n > 0, n, 1.0) / np.where(mu > 0, mu, 1.0)), 0.0)
    rem = n_total - n
    rem_mu = n_total - mu
    outside = np.where(
        rem > 0,
        rem * np.log(np.where(rem > 0, rem, 1.0) / np.where(rem_mu > 0, rem_mu, 1.0)),
        0.0,
    )
    gate = (n > mu) if direction == "high" else (n < mu)
    valid = (mu > 0) & (mu < n_total)
    return np.where(gate & valid, inside + outside, 0.0)


def scan_interval(counts: IntervalCounts, windows: list[CandidateWindow],
                  region: StudyRegion, direction: Direction) -> tuple[float, list[ScoredWindow]]:
    """Score every window on one interval's counts.

    Returns the best LLR and the windows sorted by descending LLR, ties
    broken by ascending center id, then by window size.
    """
    member_mat = _window_matrix(windows, len(region))
    n_vec = member_mat @ counts.observed.astype(np.float64)
    mu_vec = member_mat @ counts.expected
    llr = _llr_array(n_vec, mu_vec, float(counts.total_observed), direction)
    order = sorted(
        range(len(windows)),
        key=lambda i: (-llr[i], region.locations[windows[i].center].id, len(windows[i].members)),
    )
    scored = [
        ScoredWindow(window=windows[i], observed=int(round(n_vec[i])),
                     expected=float(mu_vec[i]), llr=float(llr[i]))
        for i in order
    ]
    best = scored[0].llr if scored else 0.0
    return best, scored


def _replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    # counter-based stream keyed by (seed, replicate): schedule-independent
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(seed, replicate))))


def replicate_max_llrs(counts: IntervalCounts, windows: list[CandidateWindow],
                       region: StudyRegion, direction: Direction,
                       replications: int, seed: int, workers: int = 1) -> np.ndarray:
    """Max window LLR for each multinomial null replicate.

    Replicate r redistributes the observed total across locations with
    probabilities population / total_population from its own RNG stream
    keyed by (seed, r), so results do not depend on chunking or worker
    count.
    """
    member_mat = _window_matrix(windows, len(region))
    mu_vec = member_mat @ counts.expected
    n_total = float(counts.total_observed)
    probs = region.populations / region.total_population
    member_mat_t = member_mat.T.tocsr()

    def run_chunk(start: int, stop: int) -> np.ndarray:
        draws = np.empty((stop - start, len(region)), dtype=np.float64)
        for r in range(start, stop):
            draws[r - start] = _replicate_rng(seed, r).multinomial(counts.total_observed, probs)
        window_counts = draws @ member_mat_t  # (chunk, n_windows)
        llr = _llr_array(window_counts, mu_vec[None, :], n_total, direction)
        return llr.max(axis=1) if llr.shape[1] else np.zeros(stop - start)

    bounds = [(s, min(s + _MC_CHUNK, replications)) for s in range(0, replications, _MC_CHUNK)]
    maxima = np.empty(replications, dtype=np.float64)
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for (start, stop), res in zip(bounds, pool.map(lambda b: run_chunk(*b), bounds)):
                maxima[start:stop] = res
    else:
        for start, stop in bounds:
            maxima[start:stop] = run_chunk(start, stop)
    return maxima


def monte_carlo_pvalues(counts: IntervalCounts, scored: list[ScoredWindow],
                        region: StudyRegion, direction: Direction,
                        replications: int = DEFAULT_REPLICATIONS, seed: int = 0,
                        workers: int = 1) -> np.ndarray:
    """Monte Carlo p-value for each scored window.

    A window with LLR l gets p = (1 + #{replicates whose max LLR >= l})
    / (1 + replications), so p is never 0 and the primary cluster's p is
    exactly its rank among the replicate maxima.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    windows = [s.window for s in scored]
    maxima = replicate_max_llrs(counts, windows, region, direction, replications, seed, workers)
    maxima_sorted = np.sort(maxima)
    llrs = np.array([s.llr for s in scored], dtype=np.float64)
    n_ge = replications - np.searchsorted(maxima_sorted, llrs, side="left")
    return (1.0 + n_ge) / (1.0 + replications)


def relative_risk(n_c: float, mu_c: float, n_total: float) -> float:
    """Inside/outside risk ratio (n_c/mu_c) / ((N-n_c)/(N-mu_c))."""
    if mu_c <= 0:
        return math.inf if n_c > 0 else 0.0
    inside = n_c / mu_c
    rem = n_total - n_c
    rem_mu = n_total - mu_c
    if rem_mu <= 0:
        return inside
    if rem <= 0:
        return math.inf if inside > 0 else 0.0
    return inside / (rem / rem_mu)


def select_significant(scored: list[ScoredWindow], pvalues: np.ndarray,
                       n_total: float, direction: Direction,
                       significance: float = DEFAULT_SIGNIFICANCE) -> list[Cluster]:
    """Greedy sweep over LLR-ranked windows: keep significant, disjoint ones.

    Windows are accepted in ranking order when p < significance and no
    member overlaps an already accepted cluster; accepted clusters get
    rank 1, 2, ...
    """
    clusters: list[Cluster] = []
    taken: set[int] = set()
    for s, p in zip(scored, pvalues):
        if s.llr <= 0.0 or p >= significance:
            continue
        if taken & s.window.members:
            continue
        taken |= s.window.members
        clusters.append(Cluster(
            window=s.window,
            observed=s.observed,
            expected=s.expected,
            llr=s.llr,
            relative_risk=relative_risk(s.observed, s.expected, n_total),
            p_value=float(p),
            direction=direction,
            rank=len(clusters) + 1,
        ))
    return clusters


def run_scan(region: StudyRegion, counts: IntervalCounts,
             windows: list[CandidateWindow] | None = None, *,
             max_fraction: float = DEFAULT_MAX_FRACTION,
             replications: int = DEFAULT_REPLICATIONS,
             significance: float = DEFAULT_SIGNIFICANCE,
             seed: int = 0, workers: int = 1) -> ScanResult:
    """Full high+low scan of one interval."""
    if windows is None:
        windows = enumerate_windows(region, max_fraction)
    by_direction = {}
    for direction in ("high", "low"):
        _, scored = scan_interval(counts, windows, region, direction)
        pvals = monte_carlo_pvalues(counts, scored, region, direction,
                                    replications=replications, seed=seed, workers=workers)
        by_direction[direction] = tuple(
            select_significant(scored, pvals, float(counts.total_observed), direction, significance)
        )
    return ScanResult(
        interval=counts.interval,
        high_clusters=by_direction["high"],
        low_clusters=by_direction["low"],
        replications=replications,
        seed=seed,
        significance=significance,
    )


# --- serialization ---------------------------------------------------------

def _cluster_to_dict(cluster: Cluster, region: StudyRegion) -> dict:
    center = region.locations[cluster.window.center]
    member_ids = sorted(region.locations[i].id for i in cluster.window.members)
    return {
        "rank": cluster.rank,
        "direction": cluster.direction,
        "center_id": center.id,
        "center_lat": center.lat,
        "center_lon": center.lon,
        "radius_km": cluster.window.radius_km,
        "window_population": cluster.window.window_population,
        "member_ids": member_ids,
        "observed": cluster.observed,
        "expected": cluster.expected,
        "llr": cluster.llr,
        "relative_risk": cluster.relative_risk,
        "p_value": cluster.p_value,
    }


def scan_result_to_dict(result: ScanResult, region: StudyRegion) -> dict:
    return {
        "interval": {
            "index": result.interval.index,
            "start_date": result.interval.start_date.isoformat(),
            "end_date": result.interval.end_date.isoformat(),
        },
        "replications": result.replications,
        "seed": result.seed,
        "significance": result.significance,
        "high_clusters": [_cluster_to_dict(c, region) for c in result.high_clusters],
        "low_clusters": [_cluster_to_dict(c, region) for c in result.low_clusters],
    }


def scan_result_to_json(result: ScanResult, region: StudyRegion) -> str:
    return json.dumps(scan_result_to_dict(result, region), indent=2, sort_keys=True) + "\n"


def _cluster_from_dict(d: dict, direction: Direction, region: StudyRegion) -> Cluster:
    members = frozenset(region.index_of(i) for i in d["member_ids"])
    window = CandidateWindow(
        center=region.index_of(d["center_id"]),
        members=members,
        radius_km=d["radius_km"],
        window_population=d["window_population"],
    )
    return Cluster(
        window=window,
        observed=d["observed"],
        expected=d["expected"],
        llr=d["llr"],
        relative_risk=d["relative_risk"],
        p_value=d["p_value"],
        direction=direction,
        rank=d["rank"],
    )


def scan_result_from_dict(d: dict, region: StudyRegion) -> ScanResult:
    from datetime import date

    spec = IntervalSpec(
        index=d["interval"]["index"],
        start_date=date.fromisoformat(d["interval"]["start_date"]),
        end_date=date.fromisoformat(d["interval"]["end_date"]),
    )
    return ScanResult(
        interval=spec,
        high_clusters=tuple(_cluster_from_dict(c, "high", region) for c in d["high_clusters"]),
        low_clusters=tuple(_cluster_from_dict(c, "low", region) for c in d["low_clusters"]),
        replications=d["replications"],
        seed=d["seed"],
        significance=d["significance"],
    )


CLUSTER_CSV_HEADER = ("interval,rank,direction,center_id,center_lat,center_lon,radius_km,"
                      "window_population,observed,expected,llr,relative_risk,p_value,member_ids")


def clusters_to_csv(result: ScanResult, region: StudyRegion) -> str:
    lines = [CLUSTER_CSV_HEADER]
    for cluster in result.clusters:
        d = _cluster_to_dict(cluster, region)
        lines.append(",".join([
            str(result.interval.index), str(d["rank"]), d["direction"], d["center_id"],
            repr(d["center_lat"]), repr(d["center_lon"]), repr(d["radius_km"]),
            str(d["window_population"]), str(d["observed"]), repr(d["expected"]),
            repr(d["llr"]), repr(d["relative_risk"]), repr(d["p_value"]),
            ";".join(d["member_ids"]),
        ]))
    return "\n".join(lines) + "\n"
