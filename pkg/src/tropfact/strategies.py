"""Update strategies: which position (i, j, k) to try next.

Three families share the same accept/revert machinery from the engine:

* ByRow    - one accepted update per row per sweep, with a selection
             rule (SEQ, TD, TD_A, TD_B) picking the column and factor
             index for each row;
* ByElement - at most one accepted update per given entry per sweep;
* ByMatrix  - one accepted update per sweep, chosen over the whole
              matrix, applying the coefficient- or basis-side rule at
              random.

The best-performing combination (ByRow, random row permutation, TD_A
voting, wide orientation) is exposed as fast_stmf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import (
    FitRun,
    Orientation,
    RunConfig,
    f_ulf,
    f_urf,
    run_fit,
    stmf_baseline,
)
from .tropical import (
    MaskedMatrix,
    Permutation,
    argmax_grid,
    argmax_k,
    sort_perm_by_min,
    td_grid,
    trop_matmul,
)

__all__ = [
    "StrategySpec",
    "UpdateCandidate",
    "BASELINE",
    "FASTSTMF",
    "parse_method",
    "select_k_td",
    "select_k_td_a",
    "select_k_td_b",
    "byrow_sweep",
    "byrow_seq",
    "byelement_sweep",
    "bymatrix_step",
    "fit",
    "fast_stmf",
]

FAMILIES = ("ByRow", "ByElement", "ByMatrix")
SELECTIONS = ("SEQ", "TD", "TD_A", "TD_B")
PERMUTATIONS = ("NoPerm", "PermR", "PermC", "RandPermR")

#: Method name of the classic baseline (not a StrategySpec).
BASELINE = "STMF"


@dataclass(frozen=True)
class UpdateCandidate:
    """A position to try, with the score that ranked it."""

    i: int
    j: int
    k: int
    err_score: float


@dataclass(frozen=True)
class StrategySpec:
    """A valid (family, selection, permutation, shape) combination."""

    family: str
    selection: str
    permutation: str
    prefer_wide: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.permutation not in PERMUTATIONS:
            raise ValueError(f"unknown permutation {self.permutation!r}")
        if self.family == "ByElement":
            if self.selection != "TD" or self.permutation != "PermC":
                raise ValueError("ByElement pairs only with TD and PermC")
        elif self.family == "ByMatrix":
            if self.selection != "TD" or self.permutation != "NoPerm":
                raise ValueError("ByMatrix pairs only with TD and NoPerm")
        elif self.permutation == "PermC":
            raise ValueError("ByRow does not use column permutation")

    @property
    def name(self) -> str:
        suffix = "_W" if self.prefer_wide else ""
        return f"STMF_{self.family}_{self.permutation}_{self.selection}{suffix}"


FASTSTMF = StrategySpec("ByRow", "TD_A", "RandPermR", prefer_wide=True)

_CANON = {f.lower(): f for f in FAMILIES}
_CANON.update({s.lower(): s for s in SELECTIONS})
_CANON.update({p.lower(): p for p in PERMUTATIONS})
_CANON["randperm"] = "RandPermR"


def parse_method(name: str):
    """Parse a method name into a StrategySpec, or BASELINE for "STMF".

    Names are matched case-insensitively; "FastSTMF" is an alias for
    STMF_ByRow_RandPermR_TD_A_W.
    """
    raw = name.strip()
    low = raw.lower()
    if low == "stmf":
        return BASELINE
    if low == "faststmf":
        return FASTSTMF
    parts = low.split("_")
    if parts and parts[0] == "stmf":
        parts = parts[1:]
    wide = False
    if parts and parts[-1] == "w":
        wide = True
        parts = parts[:-1]
    if len(parts) >= 3:
        family = _CANON.get(parts[0])
        perm = _CANON.get(parts[1])
        sel = _CANON.get("_".join(parts[2:]))
        if family and perm and sel and sel in SELECTIONS and perm in PERMUTATIONS:
            return StrategySpec(family, sel, perm, prefer_wide=wide)
    raise ValueError(f"cannot parse method name {name!r}")


# ---------------------------------------------------------------------------
# selection rules

def select_k_td(U, V, i: int, j: int) -> int:
    """Factor index attaining max_k(U[i, k] + V[k, j]); smallest on ties."""
    return argmax_k(U, V, i, j)


def select_k_td_a(R: MaskedMatrix, U, V, i: int, j: int) -> int:
    """Most frequent factor index among the argmax votes of row i and
    column j (given entries only); smallest index on tied counts."""
    arg = argmax_grid(U, V)
    votes = np.concatenate([arg[i, R.mask[i, :]], arg[R.mask[:, j], j]])
    return _vote(votes, U.shape[1])


def _vote(votes: np.ndarray, rank: int) -> int:
    return int(np.argmax(np.bincount(votes, minlength=rank)))


def select_k_td_b(R: MaskedMatrix, U, V, i: int, j: int) -> int:
    """Pick k at the row or column where the scan scores peak.

    j0 maximizes the column scores, i0 the row scores; the factor index
    comes from whichever of (i, j0), (i0, j) carries the larger current
    approximation value, preferring the row scan on ties.
    """
    grid = td_grid(R, U, V)
    j0 = int(np.argmax(grid.sum(axis=0)))
    i0 = int(np.argmax(grid.sum(axis=1)))
    prod = trop_matmul(U, V)
    if prod[i, j0] >= prod[i0, j]:
        return argmax_k(U, V, i, j0)
    return argmax_k(U, V, i0, j)


# ---------------------------------------------------------------------------
# sweeps

def _ranked_row_candidates(run: FitRun, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Given columns of row i ordered by decreasing column score."""
    scores = td_grid(run.R, run.U, run.V).sum(axis=0)
    cols = np.flatnonzero(run.R.mask[i, :])
    order = np.argsort(-scores[cols], kind="stable")
    return cols[order], scores


def byrow_sweep(run: FitRun, i: int, selection: str) -> bool:
    """Try candidates of row i in score order until one update sticks.

    Candidate columns are the given entries of the row ranked by the
    total column error; for each the selection rule picks k, then the
    coefficient-side update is tried and, if rejected, the basis-side
    one at the same position. The row is done after the first accepted
    update.
    """
    if selection == "SEQ":
        return byrow_seq(run, i)
    R, U, V = run.R, run.U, run.V
    cols, _ = _ranked_row_candidates(run, i)
    if selection == "TD_A":
        arg = argmax_grid(U, V)
        row_votes = arg[i, R.mask[i, :]]
        rank = U.shape[1]
    for j in cols.tolist():
        if selection == "TD":
            k = argmax_k(U, V, i, j)
        elif selection == "TD_A":
            votes = np.concatenate([row_votes, arg[R.mask[:, j], j]])
            k = _vote(votes, rank)
        elif selection == "TD_B":
            k = select_k_td_b(R, U, V, i, j)
        else:
            raise ValueError(f"unknown selection {selection!r}")
        if run.try_ulf(i, j, k):
            return True
        if run.try_urf(i, j, k):
            return True
        if run.out_of_time():
            return False
    return False


def byrow_seq(run: FitRun, i: int) -> bool:
    """Exhaustive row update: trial every (j, k, rule) and keep the best.

    The pair with the largest strict error decrease wins; ties fall to
    the smallest j, then smallest k, then the coefficient-side rule. No
    update is applied when nothing decreases the error.
    """
    best = None  # (f, j, k, op)
    cols = np.flatnonzero(run.R.mask[i, :])
    rank = run.U.shape[1]
    for j in cols.tolist():
        for k in range(rank):
            for op in (f_ulf, f_urf):
                f = run.trial(op, i, j, k)
                if f < run.err and (best is None or f < best[0]):
                    best = (f, j, k, op)
    if best is None:
        return False
    _, j, k, op = best
    accepted = run.try_ulf(i, j, k) if op is f_ulf else run.try_urf(i, j, k)
    if not accepted:
        raise AssertionError("re-applying a strictly improving trial failed")
    return True


def byelement_sweep(run: FitRun) -> None:
    """Visit every given entry once, in row-major order.

    Entries already approximated exactly are skipped; elsewhere k is the
    local argmax index and the coefficient-side update is tried first,
    then the basis-side one. At most one accepted update per entry.
    """
    R, U, V = run.R, run.U, run.V
    rows, cols = np.nonzero(R.mask)
    for i, j in zip(rows.tolist(), cols.tolist()):
        if run.out_of_time():
            return
        sums = U[i, :] + V[:, j]
        k = int(np.argmax(sums))
        if abs(R.values[i, j] - sums[k]) == 0.0:
            continue
        if not run.try_ulf(i, j, k):
            run.try_urf(i, j, k)


def bymatrix_step(run: FitRun, rng: np.random.Generator) -> bool:
    """One whole-matrix step: rank all given entries, keep one update.

    Entry scores combine the row and column error totals minus the
    entry's own error (counted once). Candidates are tried in
    decreasing score order, choosing the coefficient- or basis-side
    rule by a fair coin per candidate, until one update is accepted.
    """
    R, U, V = run.R, run.U, run.V
    grid = td_grid(R, U, V)
    row_sums = grid.sum(axis=1)
    col_sums = grid.sum(axis=0)
    arg = argmax_grid(U, V)
    rows, cols = np.nonzero(R.mask)
    scores = row_sums[rows] + col_sums[cols] - grid[rows, cols]
    order = np.argsort(-scores, kind="stable")
    for d in order.tolist():
        if run.out_of_time():
            return False
        i, j, k = int(rows[d]), int(cols[d]), int(arg[rows[d], cols[d]])
        if rng.random() < 0.5:
            accepted = run.try_ulf(i, j, k)
        else:
            accepted = run.try_urf(i, j, k)
        if accepted:
            return True
    return False


def bymatrix_candidates(run: FitRun) -> list[UpdateCandidate]:
    """Scored candidate list of a whole-matrix step, in trial order."""
    grid = td_grid(run.R, run.U, run.V)
    row_sums = grid.sum(axis=1)
    col_sums = grid.sum(axis=0)
    arg = argmax_grid(run.U, run.V)
    rows, cols = np.nonzero(run.R.mask)
    scores = row_sums[rows] + col_sums[cols] - grid[rows, cols]
    order = np.argsort(-scores, kind="stable")
    return [
        UpdateCandidate(int(rows[d]), int(cols[d]), int(arg[rows[d], cols[d]]),
                        float(scores[d]))
        for d in order.tolist()
    ]


class _SpecStrategy:
    """Adapter running a StrategySpec under the engine's outer loop."""

    def __init__(self, spec: StrategySpec):
        self.spec = spec
        self.name = spec.name

    def orient(self, R: MaskedMatrix, rng) -> tuple[MaskedMatrix, Orientation]:
        transposed = self.spec.prefer_wide and R.m > R.n
        work = R.transpose() if transposed else R.copy()
        row_perm = col_perm = None
        if self.spec.permutation == "PermR":
            row_perm = sort_perm_by_min(work, "rows")
            work = work.permute_rows(row_perm)
        elif self.spec.permutation == "RandPermR":
            row_perm = Permutation.random(work.m, rng)
            work = work.permute_rows(row_perm)
        elif self.spec.permutation == "PermC":
            col_perm = sort_perm_by_min(work, "cols")
            work = work.permute_cols(col_perm)
        return work, Orientation(transposed, row_perm, col_perm)

    def sweep(self, run: FitRun, rng):
        if self.spec.family == "ByRow":
            for i in range(run.R.m):
                if run.out_of_time():
                    return
                byrow_sweep(run, i, self.spec.selection)
        elif self.spec.family == "ByElement":
            byelement_sweep(run)
        else:
            bymatrix_step(run, rng)


def fit(R: MaskedMatrix, rank: int, method, config: RunConfig):
    """Fit R with a method given as a name, StrategySpec, or BASELINE."""
    if isinstance(method, str):
        method = parse_method(method)
    if method == BASELINE:
        return stmf_baseline(R, rank, config)
    return run_fit(R, rank, _SpecStrategy(method), config)


def fast_stmf(R: MaskedMatrix, rank: int, config: RunConfig):
    """Fit with the recommended strategy (ByRow, RandPermR, TD_A, wide)."""
    return fit(R, rank, FASTSTMF, config)
