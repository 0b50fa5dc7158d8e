"""Max-plus matrix factorization for matrix completion.

Factorizes a partially observed matrix R as U (x) V in the max-plus
semiring (entrywise max of sums), fitting by monotone single-column/row
updates. Includes the fast row-based update strategies, the classic
element-wise baseline, a synthetic mixture-data generator, evaluation
metrics, and a config-driven experiment CLI.
"""

from .datagen import SynthSpec, apply_mask, gen_mixture, gen_tall_wide_pair
from .engine import (
    FactorPair,
    Orientation,
    RunConfig,
    Trajectory,
    UpdateOutcome,
    f_ulf,
    f_urf,
    random_acol_init,
    run_fit,
    stmf_baseline,
)
from .metrics import (
    NEVER,
    bootstrap_ci,
    distance_correlation,
    nemenyi_cd,
    normalized_error,
    omega,
    rank_methods,
    rmse,
    time_to_reach,
)
from .strategies import (
    BASELINE,
    FASTSTMF,
    StrategySpec,
    fast_stmf,
    fit,
    parse_method,
)
from .tropical import (
    MaskedMatrix,
    Permutation,
    approx_error,
    argmax_k,
    b_norm,
    masked_minplus,
    sort_perm_by_min,
    td,
    td_col,
    td_row,
    trop_matmul,
)

__version__ = "0.1.0"

__all__ = [
    "MaskedMatrix",
    "Permutation",
    "trop_matmul",
    "masked_minplus",
    "b_norm",
    "approx_error",
    "td",
    "td_row",
    "td_col",
    "argmax_k",
    "sort_perm_by_min",
    "FactorPair",
    "Trajectory",
    "UpdateOutcome",
    "Orientation",
    "RunConfig",
    "random_acol_init",
    "f_ulf",
    "f_urf",
    "run_fit",
    "stmf_baseline",
    "StrategySpec",
    "BASELINE",
    "FASTSTMF",
    "parse_method",
    "fit",
    "fast_stmf",
    "SynthSpec",
    "gen_mixture",
    "apply_mask",
    "gen_tall_wide_pair",
    "normalized_error",
    "rmse",
    "distance_correlation",
    "bootstrap_ci",
    "rank_methods",
    "nemenyi_cd",
    "time_to_reach",
    "omega",
    "NEVER",
    "__version__",
]
