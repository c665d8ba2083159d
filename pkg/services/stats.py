"""
Empirical survival functions, tail-exponent estimates and stationarity
diagnostics for sampled intensity series.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import stats as sps

from services.errors import (
    DegenerateRangeError,
    EmptyInputError,
    InsufficientPointsError,
    InsufficientSamplesError,
    InsufficientSpanError,
)
from services.point_process import SampledSeries

logger = logging.getLogger(__name__)

POINTS_PER_DECADE = 20
MIN_FIT_POINTS = 10
DEFAULT_FIT_RANGE = (1e2, 1e4)
DEFAULT_STATIONARITY_THRESHOLD = 0.1
TREND_LEVEL = 1e2
TREND_ALPHA = 0.05


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    thresholds: np.ndarray
    probabilities: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class TailFit:
    slope: float
    stderr: float
    fit_min: float
    fit_max: float
    n_points: int


@dataclass(frozen=True)
class HillFit:
    slope: float
    stderr: float
    k: int


@dataclass(frozen=True, eq=False)
class StationarityReport:
    window_boundaries: np.ndarray
    curves: List[SurvivalCurve]
    max_pairwise_distance: float
    trend_statistic: float
    trend_pvalue: float
    threshold: float
    passed: bool

    @property
    def verdict(self) -> str:
        return 'pass' if self.passed else 'fail'


def log_grid(lo: float, hi: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    if not 0 < lo < hi:
        raise DegenerateRangeError(f"Grid needs 0 < lo < hi, got [{lo}, {hi}]")
    n = max(int(math.ceil(per_decade * math.log10(hi / lo))), 1) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _survival_on_grid(sorted_samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    below = np.searchsorted(sorted_samples, grid, side='left')
    return (len(sorted_samples) - below) / len(sorted_samples)


def empirical_survival(samples, grid) -> SurvivalCurve:
    """
    E(L) = fraction of samples >= L on each grid threshold.

    Thresholds above the sample maximum (where E would be 0) are dropped.
    """
    samples = np.asarray(samples, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    if samples.size == 0:
        raise EmptyInputError("Survival function of an empty sample")
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise DegenerateRangeError("Survival grid must be non-empty and strictly increasing")

    probabilities = _survival_on_grid(np.sort(samples), grid)
    keep = probabilities > 0
    return SurvivalCurve(thresholds=grid[keep], probabilities=probabilities[keep], n_samples=samples.size)


def fit_tail_exponent(curve: SurvivalCurve, fit_min: float = DEFAULT_FIT_RANGE[0],
                      fit_max: float = DEFAULT_FIT_RANGE[1]) -> TailFit:
    """OLS of log E on log L over [fit_min, fit_max]."""
    if not 0 < fit_min < fit_max:
        raise DegenerateRangeError(f"Fit range must satisfy 0 < fit_min < fit_max, got [{fit_min}, {fit_max}]")

    inside = (curve.thresholds >= fit_min) & (curve.thresholds <= fit_max) & (curve.probabilities > 0)
    n_points = int(inside.sum())
    if n_points < MIN_FIT_POINTS:
        raise InsufficientPointsError(
            f"Only {n_points} survival points in [{fit_min:g}, {fit_max:g}]; at least {MIN_FIT_POINTS} needed"
        )

    result = sps.linregress(np.log(curve.thresholds[inside]), np.log(curve.probabilities[inside]))
    fit = TailFit(slope=float(result.slope), stderr=float(result.stderr),
                  fit_min=fit_min, fit_max=fit_max, n_points=n_points)
    logger.info("Tail fit on [%g, %g]: slope=%.4f +/- %.4f (%d points)",
                fit_min, fit_max, fit.slope, fit.stderr, n_points)
    return fit


def hill_estimator(samples, k: int) -> HillFit:
    """Hill estimate over the top-k order statistics, reported as the survival slope -alpha."""
    samples = np.asarray(samples, dtype=np.float64)
    if k < MIN_FIT_POINTS or k >= samples.size:
        raise InsufficientSamplesError(f"Hill estimator needs 10 <= k < n, got k={k}, n={samples.size}")

    top = np.sort(samples)[::-1][:k + 1]
    if top[k] <= 0:
        raise InsufficientSamplesError("Hill estimator needs positive order statistics")
    excesses = np.log(top[:k] / top[k])
    mean_excess = excesses.mean()
    if mean_excess <= 0:
        raise InsufficientSamplesError("No positive log-excesses above the k-th order statistic")

    alpha = 1.0 / mean_excess
    return HillFit(slope=-alpha, stderr=alpha / math.sqrt(k), k=k)


def stationarity_diagnostic(series: SampledSeries, n_windows: int, subsample_gap: float,
                            threshold: float = DEFAULT_STATIONARITY_THRESHOLD,
                            burn_in: float = 0.0, baseline: Optional[float] = None,
                            trend_level: float = TREND_LEVEL) -> StationarityReport:
    """
    Compare survival curves of equal post-burn-in windows.

    Within each window the series is subsampled every subsample_gap to thin
    out autocorrelation. Curves are compared on a common log grid restricted
    to L >= 10 * baseline; a Spearman rank correlation between window index
    and E(trend_level) detects a drift towards fatter tails.
    """
    if n_windows < 2:
        raise InsufficientSpanError(f"At least 2 windows needed, got {n_windows}")

    series = series.after(burn_in)
    values = np.asarray(series.values, dtype=np.float64)
    span = series.duration
    if span < n_windows * 10 * subsample_gap:
        raise InsufficientSpanError(
            f"Series spans {span:g} after burn-in; {n_windows} windows of 10 x {subsample_gap:g} needed"
        )

    floor = 10 * (baseline if baseline is not None else float(values.min()))
    top = float(values.max())
    grid = log_grid(floor, top) if top > floor else np.array([floor])

    if series.uniform:
        stride = max(int(round(subsample_gap / series.dt)), 1)
        windows = np.array_split(values, n_windows)
        thinned = [np.sort(w[::stride]) for w in windows]
        lengths = [len(w) for w in windows]
        boundaries = series.t0 + series.dt * np.concatenate(([0], np.cumsum(lengths)))
    else:
        # event-time samples: equal time windows, one sample per subsample_gap
        times = series.times
        boundaries = np.linspace(times[0], times[-1], n_windows + 1)
        cuts = np.searchsorted(times, boundaries[1:-1], side='left')
        thinned = []
        for w_times, w_values in zip(np.split(times, cuts), np.split(values, cuts)):
            if w_times.size == 0:
                raise InsufficientSpanError("A stationarity window holds no samples")
            targets = np.arange(w_times[0], w_times[-1] + subsample_gap / 2, subsample_gap)
            picks = np.unique(np.searchsorted(w_times, targets, side='left'))
            thinned.append(np.sort(w_values[picks[picks < w_times.size]]))

    matrix = np.vstack([_survival_on_grid(w, grid) for w in thinned])
    distance = float(np.max(np.max(matrix, axis=0) - np.min(matrix, axis=0)))

    level_mass = np.array([_survival_on_grid(w, np.array([trend_level]))[0] for w in thinned])
    if np.ptp(level_mass) == 0:
        rho, pvalue = 0.0, 1.0
    else:
        rho, pvalue = sps.spearmanr(np.arange(n_windows), level_mass)
        rho, pvalue = float(rho), float(pvalue)

    passed = distance <= threshold and pvalue > TREND_ALPHA
    report = StationarityReport(
        window_boundaries=boundaries,
        curves=[SurvivalCurve(grid, row, len(w)) for row, w in zip(matrix, thinned)],
        max_pairwise_distance=distance,
        trend_statistic=rho,
        trend_pvalue=pvalue,
        threshold=threshold,
        passed=passed,
    )
    logger.info("Stationarity over %d windows: sup-distance=%.4f, trend rho=%.3f (p=%.3g) -> %s",
                n_windows, distance, rho, pvalue, report.verdict)
    return report


def running_mean(series: SampledSeries) -> SampledSeries:
    values = np.asarray(series.values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("Running mean of an empty series")
    means = np.cumsum(values) / np.arange(1, values.size + 1)
    return SampledSeries(series.t0, series.dt, means, sample_times=series.sample_times)


def max_relative_jump(means: SampledSeries, after: float, lag: float) -> float:
    """Largest relative change of a running mean over `lag` time units past `after`."""
    if means.uniform:
        start = int(math.ceil(max(after - means.t0, 0.0) / means.dt))
        step = max(int(round(lag / means.dt)), 1)
        tail = means.values[start::step]
    else:
        times = means.times
        targets = np.arange(max(after, times[0]), times[-1] + lag / 2, lag)
        tail = means.values[np.unique(np.minimum(np.searchsorted(times, targets), times.size - 1))]
    if tail.size < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(tail)) / tail[:-1]))


def rate_growth(times: np.ndarray, span: float) -> float:
    """Event rate in the last tenth of the span over the rate in the first tenth."""
    times = np.asarray(times)
    tenth = span / 10
    first = np.count_nonzero(times <= tenth)
    last = np.count_nonzero(times > span - tenth)
    if first == 0:
        return math.inf if last else 1.0
    return last / first


def mean_intensity_check(times: np.ndarray, horizon: float, burn_in: float = 0.0) -> float:
    """Empirical event rate after burn-in, to compare with the theoretical mean intensity."""
    times = np.asarray(times)
    return np.count_nonzero(times > burn_in) / (horizon - burn_in)
