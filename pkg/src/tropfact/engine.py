"""Fitting engine: fast single-position updates, initialization, and the
budgeted outer loop shared by every update strategy.

An update touches only column k of the coefficient factor U and row k of
the basis factor V; the engine accepts it when the b-norm error strictly
decreases and restores the saved column/row otherwise. The classic
element-by-element method with its inner search over k is provided as
the baseline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .tropical import (
    MaskedMatrix,
    Permutation,
    approx_error,
    b_norm,
    masked_minplus,
    sort_perm_by_min,
    trop_matmul,
)

__all__ = [
    "Orientation",
    "FactorPair",
    "Trajectory",
    "UpdateOutcome",
    "RunConfig",
    "FitRun",
    "random_acol_init",
    "f_ulf",
    "f_urf",
    "run_fit",
    "stmf_baseline",
]


@dataclass
class Orientation:
    """Record of the transforms applied to the data before fitting."""

    transposed: bool = False
    row_perm: Permutation | None = None
    col_perm: Permutation | None = None

    def apply(self, R: MaskedMatrix) -> MaskedMatrix:
        work = R.transpose() if self.transposed else R.copy()
        if self.row_perm is not None:
            work = work.permute_rows(self.row_perm)
        if self.col_perm is not None:
            work = work.permute_cols(self.col_perm)
        return work

    def restore(self, U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map fitted factors back to the original data orientation."""
        if self.row_perm is not None:
            U = U[self.row_perm.inverse, :]
        if self.col_perm is not None:
            V = V[:, self.col_perm.inverse]
        if self.transposed:
            U, V = V.T.copy(), U.T.copy()
        return np.ascontiguousarray(U), np.ascontiguousarray(V)

    def to_dict(self) -> dict:
        return {
            "transposed": self.transposed,
            "row_perm": None if self.row_perm is None else self.row_perm.forward.tolist(),
            "col_perm": None if self.col_perm is None else self.col_perm.forward.tolist(),
        }


@dataclass
class FactorPair:
    """Coefficient factor U (m x r) and basis factor V (r x n)."""

    U: np.ndarray
    V: np.ndarray
    rank: int
    orientation: Orientation = field(default_factory=Orientation)

    def product(self) -> np.ndarray:
        return trop_matmul(self.U, self.V)


class Trajectory:
    """Time-stamped, non-increasing error samples of one fitting run.

    Timestamps are wall-clock seconds for time-budgeted runs and sweep
    counts for sweep-budgeted runs (``time_unit`` says which).
    """

    def __init__(self, t_init: float, t_max: float, time_unit: str = "seconds"):
        self.times: list[float] = []
        self.errors: list[float] = []
        self.t_init = t_init
        self.t_max = t_max
        self.time_unit = time_unit

    def append(self, t: float, err: float):
        if self.times and t < self.times[-1]:
            raise ValueError("timestamps must be non-decreasing")
        self.times.append(float(t))
        self.errors.append(float(err))

    @property
    def init_error(self) -> float:
        return self.errors[0]

    @property
    def final_error(self) -> float:
        return self.errors[-1]

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class UpdateOutcome:
    """New error plus the saved column/row needed to undo the update."""

    f: float
    k: int
    saved_col: np.ndarray
    saved_row: np.ndarray

    def revert(self, U: np.ndarray, V: np.ndarray):
        U[:, self.k] = self.saved_col
        V[self.k, :] = self.saved_row


@dataclass
class RunConfig:
    """Knobs of one fitting run.

    At least one of ``budget_sweeps`` / ``budget_seconds`` must be set;
    whichever is hit first stops the run. ``epsilon`` is relative to the
    post-init error: a sweep improving by less than epsilon * e0
    terminates the run. ``audit`` re-checks after every rejected update
    that the factors were restored bit-exactly (slow; for verification).
    """

    rank: int
    budget_sweeps: int | None = None
    budget_seconds: float | None = None
    epsilon: float = 1e-8
    acol_columns: int = 5
    seed: int | None = None
    audit: bool = False

    def validate(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.budget_sweeps is None and self.budget_seconds is None:
            raise ValueError("set budget_sweeps or budget_seconds")
        if self.budget_sweeps is not None and self.budget_sweeps < 0:
            raise ValueError("budget_sweeps must be >= 0")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ValueError("budget_seconds must be > 0")
        if self.acol_columns < 1:
            raise ValueError("acol_columns must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


def random_acol_init(
    R: MaskedMatrix, rank: int, columns: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Random Acol initialization of U, with V residuated from it.

    Each column of U is the entrywise mean over given values of
    ``columns`` data columns drawn uniformly with replacement; rows where
    all draws are missing fall back to the row mean of the given data.
    V is then the largest matrix with U (x) V <= R on given entries.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    q = min(columns, R.n)
    if q < 1:
        raise ValueError("need at least one column to average")
    row_fallback = R.row_means()
    U = np.empty((R.m, rank), dtype=np.float64)
    for c in range(rank):
        picks = rng.integers(0, R.n, size=q)
        vals = np.where(R.mask[:, picks], R.values[:, picks], 0.0)
        counts = R.mask[:, picks].sum(axis=1)
        with np.errstate(invalid="ignore"):
            means = vals.sum(axis=1) / counts
        U[:, c] = np.where(counts > 0, means, row_fallback)
    V = masked_minplus(-U.T, R)
    return U, V


def _residuate_row(R: MaskedMatrix, u_col: np.ndarray) -> np.ndarray:
    """Row vector v with v[j] = min over given i of R[i, j] - u_col[i]."""
    shifted = R.values - u_col[:, None]
    return np.min(np.where(R.mask, shifted, np.inf), axis=0)


def _residuate_col(R: MaskedMatrix, v_row: np.ndarray) -> np.ndarray:
    """Column vector u with u[i] = min over given j of R[i, j] - v_row[j]."""
    shifted = R.values - v_row[None, :]
    return np.min(np.where(R.mask, shifted, np.inf), axis=1)


def f_ulf(R: MaskedMatrix, U: np.ndarray, V: np.ndarray, i: int, j: int, k: int) -> UpdateOutcome:
    """Fast update seeded from the coefficient side at position (i, j, k).

    Sets U[i, k] from the data entry, re-residuates row k of V against
    the new column and then column k of U against the new row; mutates
    U and V in place and reports the resulting error. Only column k of U
    and row k of V change.
    """
    if not R.mask[i, j]:
        raise ValueError(f"entry ({i}, {j}) is missing")
    saved_col = U[:, k].copy()
    saved_row = V[k, :].copy()
    U[i, k] = R.values[i, j] - V[k, j]
    V[k, :] = _residuate_row(R, U[:, k])
    U[:, k] = _residuate_col(R, V[k, :])
    return UpdateOutcome(approx_error(R, U, V), k, saved_col, saved_row)


def f_urf(R: MaskedMatrix, U: np.ndarray, V: np.ndarray, i: int, j: int, k: int) -> UpdateOutcome:
    """Fast update seeded from the basis side; mirror image of f_ulf."""
    if not R.mask[i, j]:
        raise ValueError(f"entry ({i}, {j}) is missing")
    saved_col = U[:, k].copy()
    saved_row = V[k, :].copy()
    V[k, j] = R.values[i, j] - U[i, k]
    U[:, k] = _residuate_col(R, V[k, :])
    V[k, :] = _residuate_row(R, U[:, k])
    return UpdateOutcome(approx_error(R, U, V), k, saved_col, saved_row)


class FitRun:
    """Mutable state of one fitting run in its work orientation.

    Strategies drive the run through try_ulf/try_urf (attempt, accept on
    strict error decrease, revert otherwise) and check out_of_time()
    between attempts when a wall-clock budget is set.
    """

    def __init__(self, R: MaskedMatrix, U: np.ndarray, V: np.ndarray,
                 config: RunConfig, wall_clock: bool):
        self.R = R
        self.U = U
        self.V = V
        self.config = config
        self.wall_clock = wall_clock
        self._t0 = time.perf_counter()
        self.current_sweep = 0
        self.err = approx_error(R, U, V)
        t_max = config.budget_seconds if wall_clock else float(config.budget_sweeps)
        self.trajectory = Trajectory(
            t_init=self.elapsed(), t_max=t_max,
            time_unit="seconds" if wall_clock else "sweeps",
        )
        self.trajectory.append(self._now(), self.err)
        self.accepted_updates = 0
        self.attempted_updates = 0

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0 if self.wall_clock else 0.0

    def _now(self) -> float:
        if self.wall_clock:
            return self.elapsed()
        return float(self.current_sweep)

    def out_of_time(self) -> bool:
        return self.wall_clock and self.elapsed() >= self.config.budget_seconds

    def _attempt(self, op, i: int, j: int, k: int) -> bool:
        if self.config.audit:
            u_before, v_before = self.U.copy(), self.V.copy()
        outcome = op(self.R, self.U, self.V, i, j, k)
        self.attempted_updates += 1
        if outcome.f < self.err:
            self.err = outcome.f
            self.accepted_updates += 1
            self.trajectory.append(self._now(), self.err)
            return True
        outcome.revert(self.U, self.V)
        if self.config.audit:
            if not (
                np.array_equal(self.U, u_before)
                and np.array_equal(self.V, v_before)
            ):
                raise AssertionError("revert did not restore the factors")
        return False

    def try_ulf(self, i: int, j: int, k: int) -> bool:
        return self._attempt(f_ulf, i, j, k)

    def try_urf(self, i: int, j: int, k: int) -> bool:
        return self._attempt(f_urf, i, j, k)

    def trial(self, op, i: int, j: int, k: int) -> float:
        """Apply an update, record nothing, revert, return its error."""
        outcome = op(self.R, self.U, self.V, i, j, k)
        outcome.revert(self.U, self.V)
        return outcome.f

    def mark_sweep_boundary(self):
        self.trajectory.append(self._now(), self.err)


def run_fit(R: MaskedMatrix, rank: int, strategy, config: RunConfig):
    """Budgeted outer loop: orient, initialize, sweep until done, restore.

    ``strategy`` provides orient(R, rng) -> (work matrix, Orientation)
    and sweep(run, rng) performing one pass of updates. Returns the
    factor pair in the original orientation plus the run's trajectory.
    """
    config.validate()
    R.validate_coverage()
    rng = np.random.default_rng(config.seed)
    wall_clock = config.budget_seconds is not None

    orientation: Orientation
    work, orientation = strategy.orient(R, rng)
    U, V = random_acol_init(work, rank, config.acol_columns, rng)
    run = FitRun(work, U, V, config, wall_clock)

    eps = config.epsilon * run.err
    sweeps = 0
    if run.err > 0.0:
        while True:
            if config.budget_sweeps is not None and sweeps >= config.budget_sweeps:
                break
            if run.out_of_time():
                break
            run.current_sweep = sweeps + 1
            err_before = run.err
            strategy.sweep(run, rng)
            sweeps += 1
            run.mark_sweep_boundary()
            if err_before - run.err < eps:
                break

    U_out, V_out = orientation.restore(run.U, run.V)
    pair = FactorPair(U_out, V_out, rank, orientation)
    return pair, run.trajectory


class _BaselineStrategy:
    """Classic method: per given element, search k under each update rule.

    Columns are pre-sorted ascending by their minimum; the data is never
    transposed. For every given (i, j) in row-major order the first k
    whose coefficient-side update decreases the error is kept; failing
    all k, the basis-side updates are tried the same way.
    """

    name = "STMF"

    def orient(self, R: MaskedMatrix, rng) -> tuple[MaskedMatrix, Orientation]:
        perm = sort_perm_by_min(R, "cols")
        return R.permute_cols(perm), Orientation(col_perm=perm)

    def sweep(self, run: FitRun, rng):
        rank = run.U.shape[1]
        rows, cols = np.nonzero(run.R.mask)
        for i, j in zip(rows.tolist(), cols.tolist()):
            if run.out_of_time():
                return
            accepted = False
            for k in range(rank):
                if run.try_ulf(i, j, k):
                    accepted = True
                    break
            if not accepted:
                for k in range(rank):
                    if run.try_urf(i, j, k):
                        break


def stmf_baseline(R: MaskedMatrix, rank: int, config: RunConfig):
    """Fit with the original element-wise method (the comparison baseline)."""
    return run_fit(R, rank, _BaselineStrategy(), config)
