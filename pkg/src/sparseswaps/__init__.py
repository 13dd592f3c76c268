"""Exact per-row pruning-mask refinement via greedy 1-swaps.

Given a layer's weights W and the Gram matrix G = X X^T of its calibration
activations, this package evaluates the masked reconstruction loss exactly,
builds feasible warm-start masks under per-row or N:M sparsity, and refines
them with greedy 1-swaps whose costs are O(1) lookups in G. A brute-force
oracle certifies the engine on small instances, and a seeded synthetic
harness exercises the qualitative behaviour at desk scale.
"""

__version__ = "0.1.0"

from .constraints import BlockNM, PerRow, parse_constraint
from .errors import SparseSwapsError
from .gram import accumulate_gram, feature_norms, svd_equivalence_check
from .kernels import active_backend, available_backends
from .objective import full_loss, row_loss_direct, row_loss_gram
from .oracle import brute_force_row, enumerate_swap_deltas, is_one_swap_optimal
from .swapengine import (
    RefineConfig,
    RefineReport,
    RowState,
    SwapDecision,
    apply_swap,
    best_swap,
    greedy_separate_baseline,
    init_correlation,
    refine_matrix,
    refine_row,
    swap_delta,
)
from .synth import SynthConfig, generate_layer, relative_error_reduction
from .tensorio import load_mask, load_matrix, save_mask, save_matrix
from .warmstart import (
    prune_count_from_fraction,
    score_magnitude,
    score_ria,
    score_wanda,
    select_mask,
)

__all__ = [
    "BlockNM",
    "PerRow",
    "RefineConfig",
    "RefineReport",
    "RowState",
    "SparseSwapsError",
    "SwapDecision",
    "SynthConfig",
    "accumulate_gram",
    "active_backend",
    "apply_swap",
    "available_backends",
    "best_swap",
    "brute_force_row",
    "enumerate_swap_deltas",
    "feature_norms",
    "full_loss",
    "generate_layer",
    "greedy_separate_baseline",
    "init_correlation",
    "is_one_swap_optimal",
    "load_mask",
    "load_matrix",
    "parse_constraint",
    "prune_count_from_fraction",
    "refine_matrix",
    "refine_row",
    "relative_error_reduction",
    "row_loss_direct",
    "row_loss_gram",
    "save_mask",
    "save_matrix",
    "score_magnitude",
    "score_ria",
    "score_wanda",
    "select_mask",
    "svd_equivalence_check",
    "swap_delta",
]
