"""Synthetic dataset generation: low-rank mixtures of max-plus and
standard products, plus uniform masking into train/test splits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tropical import MaskedMatrix, trop_matmul

__all__ = ["SynthSpec", "gen_mixture", "apply_mask", "gen_tall_wide_pair"]

_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SynthSpec:
    """Shape and structure of one synthetic dataset."""

    rows: int
    cols: int
    lam: float
    true_rank: int = 3
    seed: int | None = None
    mask_fraction: float = 0.2

    def __post_init__(self):
        if min(self.rows, self.cols) < self.true_rank:
            raise ValueError("dimensions must be >= true_rank")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must be in [0, 1]")
        if not 0.0 <= self.mask_fraction < 1.0:
            raise ValueError("mask_fraction must be in [0, 1)")


def gen_mixture(spec: SynthSpec):
    """Blend of the max-plus and standard products of uniform factors.

    Returns (R, A, B) with R = lam * (A (x) B) + (1 - lam) * (A . B),
    A of shape rows x true_rank and B of true_rank x cols, entries drawn
    i.i.d. from [0, 1). lam = 0 gives purely linear structure, lam = 1
    purely tropical.
    """
    rng = np.random.default_rng(spec.seed)
    A = rng.random((spec.rows, spec.true_rank))
    B = rng.random((spec.true_rank, spec.cols))
    R = spec.lam * trop_matmul(A, B) + (1.0 - spec.lam) * (A @ B)
    return R, A, B


def apply_mask(R_full: np.ndarray, fraction: float, seed=None):
    """Hide exactly floor(fraction * m * n) entries uniformly at random.

    Hidden entries form the test set. Draws are repeated until every row
    and column keeps at least one given entry; an impossible fraction
    raises.

    Returns (train, test_mask) where train is a MaskedMatrix and
    test_mask flags the hidden entries.
    """
    R_full = np.asarray(R_full, dtype=np.float64)
    m, n = R_full.shape
    count = int(np.floor(fraction * m * n))
    if m * n - count < max(m, n):
        raise ValueError(
            f"masking {count} of {m * n} entries cannot leave every row "
            "and column a given entry"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(_MAX_REDRAWS):
        hidden = np.zeros(m * n, dtype=bool)
        hidden[rng.choice(m * n, size=count, replace=False)] = True
        hidden = hidden.reshape(m, n)
        given = ~hidden
        if given.any(axis=1).all() and given.any(axis=0).all():
            return MaskedMatrix(R_full.copy(), given), hidden
    raise ValueError("could not draw a mask keeping every row and column covered")


def gen_tall_wide_pair(spec: SynthSpec):
    """The same dataset in both orientations: (tall, wide = tall^T)."""
    R, _, _ = gen_mixture(spec)
    if R.shape[0] < R.shape[1]:
        R = R.T
    return R, R.T.copy()
