"""Evaluation statistics: normalized error against a baseline run,
RMSE on train/test masks, distance correlation, bootstrap intervals,
rank aggregation with the critical-difference threshold, and the
preferred-shape proportion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata, studentized_range

from .engine import Trajectory

__all__ = [
    "NEVER",
    "step_interpolate",
    "make_grid",
    "normalized_error",
    "rmse",
    "distance_correlation",
    "masked_dc",
    "bootstrap_ci",
    "rank_methods",
    "average_ranks",
    "nemenyi_cd",
    "time_to_reach",
    "omega",
    "NEGrid",
]

#: Marker for "the target error is never reached"; sorts after any time.
NEVER = math.inf


def step_interpolate(times, values, grid) -> np.ndarray:
    """Piecewise-constant interpolation: last sample at or before t.

    Grid points before the first sample take the first sample's value.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.size == 0:
        raise ValueError("empty trajectory")
    idx = np.searchsorted(times, np.asarray(grid, dtype=np.float64), side="right") - 1
    return values[np.maximum(idx, 0)]


def make_grid(t_max: float, step: float = 1.0, t_start: float = 0.0) -> np.ndarray:
    """Regular time grid from t_start to t_max inclusive."""
    if step <= 0:
        raise ValueError("step must be positive")
    n_steps = int(math.floor((t_max - t_start) / step + 1e-9))
    grid = t_start + step * np.arange(n_steps + 1)
    if grid[-1] < t_max:
        grid = np.append(grid, t_max)
    return grid


@dataclass
class NEGrid:
    """Normalized errors of several methods on a common time grid."""

    times: np.ndarray
    values: dict[str, np.ndarray]


def normalized_error(traj: Trajectory, baseline: Trajectory, grid) -> np.ndarray:
    """Error relative to the baseline's initial-to-final error span.

    0 means matching the baseline's final error, 1 its post-init error;
    negative values mean beating the baseline's final error. The
    baseline's own curve is 1 at its first sample time and 0 from the
    moment it reaches its final error.
    """
    gamma_init = baseline.init_error
    gamma_max = step_interpolate(baseline.times, baseline.errors,
                                 [baseline.t_max])[0]
    span = gamma_init - gamma_max
    if span == 0.0:
        raise ValueError("degenerate baseline: error never changed")
    e = step_interpolate(traj.times, traj.errors, grid)
    return (e - gamma_max) / span


def rmse(pred, truth, mask) -> float:
    """Root-mean-square difference over the masked entries (0 if empty)."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    diff = (pred - truth)[mask]
    if diff.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(diff**2)))


def distance_correlation(x, y) -> float:
    """Sample distance correlation of two equal-length 1-d samples.

    Uses doubly-centered pairwise distance matrices; 0 by convention
    when either sample has zero distance variance (e.g. a constant
    vector). The result lies in [0, 1].
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError("samples must have equal length")
    if x.size < 2:
        raise ValueError("need at least two samples")
    A = _centered_distances(x)
    B = _centered_distances(y)
    dvar_x = np.mean(A * A)
    dvar_y = np.mean(B * B)
    if dvar_x <= 0.0 or dvar_y <= 0.0:
        return 0.0
    dcov2 = max(np.mean(A * B), 0.0)
    return float(np.sqrt(dcov2 / np.sqrt(dvar_x * dvar_y)))


def _centered_distances(x: np.ndarray) -> np.ndarray:
    d = np.abs(x[:, None] - x[None, :])
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def masked_dc(truth, approx, mask, max_entries: int = 2000, seed: int = 0) -> float:
    """Distance correlation between truth and approximation on a mask.

    Masks larger than ``max_entries`` are subsampled (seeded) to cap the
    quadratic distance-matrix cost.
    """
    mask = np.asarray(mask, dtype=bool)
    x = np.asarray(truth, dtype=np.float64)[mask]
    y = np.asarray(approx, dtype=np.float64)[mask]
    if x.size > max_entries:
        idx = np.random.default_rng(seed).choice(x.size, size=max_entries,
                                                 replace=False)
        x, y = x[idx], y[idx]
    return distance_correlation(x, y)


def bootstrap_ci(samples, statistic=np.mean, n_resamples: int = 1000,
                 level: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile confidence interval of a statistic under resampling."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("no samples")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, samples.size, size=(n_resamples, samples.size))
    stats = np.array([statistic(samples[row]) for row in idx])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def rank_methods(scores, lower_is_better: bool = True) -> np.ndarray:
    """Per-dataset ranks of a methods x datasets score table.

    Ties share the average of their positions; infinite scores ("never")
    all tie at the worst rank.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("expected a methods x datasets table")
    signed = scores if lower_is_better else -scores
    return np.column_stack(
        [rankdata(signed[:, d], method="average") for d in range(scores.shape[1])]
    )


def average_ranks(rank_table: np.ndarray) -> np.ndarray:
    return np.asarray(rank_table, dtype=np.float64).mean(axis=1)


def nemenyi_cd(k: int, n_datasets: int, alpha: float = 0.05) -> float:
    """Critical difference of average ranks: q_alpha * sqrt(k(k+1)/(6N)).

    q_alpha is the studentized-range quantile at infinite degrees of
    freedom divided by sqrt(2).
    """
    if k < 2 or n_datasets < 1:
        raise ValueError("need k >= 2 methods and N >= 1 datasets")
    q = studentized_range.ppf(1.0 - alpha, k, np.inf) / math.sqrt(2.0)
    return float(q * math.sqrt(k * (k + 1) / (6.0 * n_datasets)))


def time_to_reach(traj: Trajectory, target: float, grid) -> float:
    """Earliest grid time with error <= target, or NEVER."""
    errs = step_interpolate(traj.times, traj.errors, grid)
    hits = np.flatnonzero(errs <= target)
    if hits.size == 0:
        return NEVER
    return float(np.asarray(grid, dtype=np.float64)[hits[0]])


def omega(wide_errors, tall_errors) -> float:
    """Proportion of paired tests where the wide orientation wins.

    1 means the wide shape always reached the smaller error, 0 the tall
    shape always did.
    """
    wide = np.asarray(wide_errors, dtype=np.float64)
    tall = np.asarray(tall_errors, dtype=np.float64)
    if wide.shape != tall.shape or wide.size == 0:
        raise ValueError("need equal-length nonempty error vectors")
    return float(np.mean(wide < tall))
