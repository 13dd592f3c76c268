"""Importance scores and feasible initial masks.

Scores are plain nonnegative matrices; select_mask turns any score matrix
into a mask satisfying a sparsity constraint. The refinement engine treats
these masks purely as starting points.
"""

import math

import numpy as np

from .constraints import PerRow, validate_constraint
from .errors import ShapeMismatch
from .gram import feature_norms


def score_magnitude(weights) -> np.ndarray:
    """Elementwise |W|."""
    return np.abs(np.asarray(weights, dtype=np.float64))


def score_wanda(weights, g) -> np.ndarray:
    """|W_ij| scaled by the j-th activation norm sqrt(G_jj)."""
    weights = np.asarray(weights, dtype=np.float64)
    norms = feature_norms(g)
    if weights.ndim != 2 or weights.shape[1] != norms.shape[0]:
        raise ShapeMismatch(
            f"weights shape {weights.shape} incompatible with d_in={norms.shape[0]}"
        )
    return np.abs(weights) * norms[np.newaxis, :]


def score_ria(weights, g, a: float = 0.5) -> np.ndarray:
    """Relative-importance score with activation-norm exponent `a`.

    Each |W_ij| is normalized by its column and row absolute sums (a weight
    matters more when its neighbours are small), then scaled by
    sqrt(G_jj)^a. Rows or columns that are entirely zero contribute zero to
    their ratio term instead of dividing by zero.
    """
    weights = np.asarray(weights, dtype=np.float64)
    norms = feature_norms(g)
    if weights.ndim != 2 or weights.shape[1] != norms.shape[0]:
        raise ShapeMismatch(
            f"weights shape {weights.shape} incompatible with d_in={norms.shape[0]}"
        )
    aw = np.abs(weights)
    col_sums = aw.sum(axis=0)
    row_sums = aw.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        by_col = np.where(col_sums > 0.0, aw / col_sums[np.newaxis, :], 0.0)
        by_row = np.where(row_sums[:, np.newaxis] > 0.0, aw / row_sums[:, np.newaxis], 0.0)
    return (by_col + by_row) * norms[np.newaxis, :] ** a


def prune_count_from_fraction(d_in: int, sparsity: float) -> int:
    """floor(sparsity * d_in); realized sparsity never exceeds the request."""
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError(f"sparsity {sparsity} outside [0, 1]")
    return int(math.floor(sparsity * d_in))


def select_mask(scores, constraint) -> np.ndarray:
    """Keep the highest-scoring entries allowed by the constraint.

    Per-row: the d_in - prune_count best entries of each row survive.
    N:M: the n_keep best entries of every aligned block survive.
    Ties keep the lower column index, so identical scores always produce
    identical masks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ShapeMismatch(f"expected 2-D scores, got ndim={scores.ndim}")
    d_out, d_in = scores.shape
    validate_constraint(constraint, d_in)

    mask = np.zeros((d_out, d_in), dtype=np.float64)
    if isinstance(constraint, PerRow):
        n_keep = d_in - constraint.prune_count
        if n_keep == 0:
            return mask
        # Stable sort on negated scores: descending score, ascending index on ties.
        order = np.argsort(-scores, axis=1, kind="stable")
        rows = np.arange(d_out)[:, np.newaxis]
        mask[rows, order[:, :n_keep]] = 1.0
        return mask

    n_blocks = d_in // constraint.m_block
    blocked = scores.reshape(d_out, n_blocks, constraint.m_block)
    order = np.argsort(-blocked, axis=2, kind="stable")
    keep_local = order[:, :, : constraint.n_keep]
    offsets = (np.arange(n_blocks) * constraint.m_block)[np.newaxis, :, np.newaxis]
    rows = np.arange(d_out)[:, np.newaxis, np.newaxis]
    mask[rows, keep_local + offsets] = 1.0
    return mask
