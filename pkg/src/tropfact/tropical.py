"""Max-plus kernels over dense matrices with missing entries.

Scalars live in the max-plus semiring (reals plus -inf as the additive
identity); +inf is reserved as the "empty min" sentinel of the masked
min-plus product. Data and factor entries are always finite; the
infinities only appear inside kernel operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MaskedMatrix",
    "Permutation",
    "trop_matmul",
    "masked_minplus",
    "b_norm",
    "approx_error",
    "td",
    "argmax_k",
    "td_row",
    "td_col",
    "td_grid",
    "argmax_grid",
    "sort_perm_by_min",
]


@dataclass
class Permutation:
    """Permutation of 0..n-1 stored with its inverse."""

    forward: np.ndarray

    def __post_init__(self):
        self.forward = np.asarray(self.forward, dtype=np.intp)
        n = self.forward.size
        seen = np.zeros(n, dtype=bool)
        if self.forward.ndim != 1 or n == 0:
            raise ValueError("permutation must be a nonempty 1-d index array")
        if self.forward.min(initial=0) < 0 or self.forward.max(initial=-1) >= n:
            raise ValueError("permutation indices out of range")
        seen[self.forward] = True
        if not seen.all():
            raise ValueError("permutation indices must be distinct")
        inv = np.empty(n, dtype=np.intp)
        inv[self.forward] = np.arange(n, dtype=np.intp)
        self.inverse = inv

    @property
    def size(self) -> int:
        return self.forward.size

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.intp))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))


class MaskedMatrix:
    """Dense real matrix with a boolean given-mask (True = given).

    Values under the mask are unspecified and stored as NaN so that any
    code path ignoring the mask fails loudly.
    """

    def __init__(self, values, mask=None):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("expected a 2-d value array")
        if mask is None:
            mask = np.isfinite(values)
        mask = np.array(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ValueError(
                f"mask shape {mask.shape} != value shape {values.shape}"
            )
        if not np.isfinite(values[mask]).all():
            raise ValueError("given entries must be finite")
        values[~mask] = np.nan
        self.values = values
        self.mask = mask

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def given_count(self) -> int:
        return int(self.mask.sum())

    @classmethod
    def from_full(cls, values) -> "MaskedMatrix":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool))

    def copy(self) -> "MaskedMatrix":
        return MaskedMatrix(self.values.copy(), self.mask.copy())

    def validate_coverage(self):
        """Require at least one given entry per row and per column.

        Residuation against this matrix is finite exactly under this
        condition; loaders call it before fitting starts.
        """
        if self.mask.size == 0:
            raise ValueError("empty matrix")
        if not self.mask.any(axis=1).all():
            bad = int(np.flatnonzero(~self.mask.any(axis=1))[0])
            raise ValueError(f"row {bad} has no given entries")
        if not self.mask.any(axis=0).all():
            bad = int(np.flatnonzero(~self.mask.any(axis=0))[0])
            raise ValueError(f"column {bad} has no given entries")

    def transpose(self) -> "MaskedMatrix":
        return MaskedMatrix(self.values.T.copy(), self.mask.T.copy())

    def permute_rows(self, p: Permutation) -> "MaskedMatrix":
        if p.size != self.m:
            raise ValueError("permutation length does not match row count")
        return MaskedMatrix(self.values[p.forward], self.mask[p.forward])

    def permute_cols(self, p: Permutation) -> "MaskedMatrix":
        if p.size != self.n:
            raise ValueError("permutation length does not match column count")
        return MaskedMatrix(self.values[:, p.forward], self.mask[:, p.forward])

    def row_mins(self) -> np.ndarray:
        """Per-row minimum over given entries (+inf for all-missing rows)."""
        return np.min(np.where(self.mask, self.values, np.inf), axis=1)

    def col_mins(self) -> np.ndarray:
        return np.min(np.where(self.mask, self.values, np.inf), axis=0)

    def row_means(self) -> np.ndarray:
        """Per-row mean over given entries; raises on an all-missing row."""
        counts = self.mask.sum(axis=1)
        if (counts == 0).any():
            raise ValueError("row mean undefined for an all-missing row")
        sums = np.where(self.mask, self.values, 0.0).sum(axis=1)
        return sums / counts


def trop_matmul(A, B) -> np.ndarray:
    """Max-plus matrix product: out[i, j] = max_k (A[i, k] + B[k, j]).

    Entries may be finite or -inf (the additive identity); an output
    entry is -inf only when every summand is.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"inner dimensions differ: {A.shape} x {B.shape}")
    # (m, p, 1) + (1, p, n) -> max over the shared axis
    return np.max(A[:, :, None] + B[None, :, :], axis=1)


def _as_values_mask(M) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(M, MaskedMatrix):
        return M.values, M.mask
    M = np.asarray(M, dtype=np.float64)
    return M, np.ones(M.shape, dtype=bool)


def masked_minplus(A, B) -> np.ndarray:
    """Masked min-plus product: min over given pairs of A[i, k] + B[k, j].

    Either operand may be a MaskedMatrix; plain arrays count as fully
    given. Positions with no given (A[i, k], B[k, j]) pair yield the
    +inf sentinel, left to the caller to interpret.
    """
    a_val, a_mask = _as_values_mask(A)
    b_val, b_mask = _as_values_mask(B)
    if a_val.shape[1] != b_val.shape[0]:
        raise ValueError(
            f"inner dimensions differ: {a_val.shape} x {b_val.shape}"
        )
    sums = a_val[:, :, None] + b_val[None, :, :]
    valid = a_mask[:, :, None] & b_mask[None, :, :]
    return np.min(np.where(valid, sums, np.inf), axis=1)


def b_norm(W, mask=None) -> float:
    """Sum of absolute values over given entries (0 for an empty mask).

    The values are sorted before summing so the result depends only on
    the multiset of entries, not on matrix orientation; this keeps the
    norm bit-identical under transposition and permutation.
    """
    if isinstance(W, MaskedMatrix):
        values, mask = W.values, W.mask
    else:
        values = np.asarray(W, dtype=np.float64)
    vals = np.abs(values if mask is None else values[mask])
    if vals.size == 0:
        return 0.0
    return float(np.sum(np.sort(vals, axis=None)))


def approx_error(R: MaskedMatrix, U, V) -> float:
    """b-norm of R - U (x) V restricted to the given entries of R."""
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.shape[0] != R.m or V.shape[1] != R.n or U.shape[1] != V.shape[0]:
        raise ValueError(
            f"factor shapes {U.shape} x {V.shape} do not match data {R.shape}"
        )
    return b_norm(R.values - trop_matmul(U, V), R.mask)


def td(R: MaskedMatrix, U, V, i: int, j: int) -> float:
    """Entrywise max-plus error |R[i, j] - max_k(U[i, k] + V[k, j])|."""
    if not R.mask[i, j]:
        raise ValueError(f"entry ({i}, {j}) is missing")
    return float(abs(R.values[i, j] - np.max(U[i, :] + V[:, j])))


def argmax_k(U, V, i: int, j: int) -> int:
    """Index of the largest U[i, k] + V[k, j]; ties go to the smallest k."""
    return int(np.argmax(U[i, :] + V[:, j]))


def td_grid(R: MaskedMatrix, U, V, product: np.ndarray | None = None) -> np.ndarray:
    """Entrywise max-plus errors with 0 at missing entries.

    Zeros under the mask make row/column sums directly usable as td_row
    and td_col.
    """
    if product is None:
        product = trop_matmul(U, V)
    return np.where(R.mask, np.abs(R.values - product), 0.0)


def td_row(R: MaskedMatrix, U, V, i: int) -> float:
    """Sum of entrywise errors over the given entries of row i."""
    prod_row = np.max(U[i, :][None, :] + V.T, axis=1)
    return float(np.sum(np.abs(R.values[i] - prod_row)[R.mask[i]]))


def td_col(R: MaskedMatrix, U, V, j: int) -> float:
    """Sum of entrywise errors over the given entries of column j."""
    prod_col = np.max(U + V[:, j][None, :], axis=1)
    return float(np.sum(np.abs(R.values[:, j] - prod_col)[R.mask[:, j]]))


def argmax_grid(U, V) -> np.ndarray:
    """argmax_k(U[i, k] + V[k, j]) for every (i, j), smallest index on ties."""
    return np.argmax(U[:, :, None] + V[None, :, :], axis=1)


def sort_perm_by_min(M: MaskedMatrix, axis: str) -> Permutation:
    """Permutation ordering rows or columns ascending by their minimum.

    Minima ignore missing entries; equal minima keep their original
    order (stable sort).
    """
    if axis == "rows":
        mins = M.row_mins()
    elif axis == "cols":
        mins = M.col_mins()
    else:
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    return Permutation(np.argsort(mins, kind="stable"))
