"""Gram matrix accumulation from calibration activation blocks.

The pruning loss of a row never needs the raw activations X, only
G = X X^T. G is accumulated block by block as calibration columns arrive,
then symmetrized once, so downstream swap costs are pure table lookups.
"""

import numpy as np

from .errors import DecompositionFailure, ShapeMismatch


def accumulate_gram(blocks) -> np.ndarray:
    """Accumulate G = X X^T over activation blocks (each d_in x b_i).

    Per-block products are reduced in a fixed pairwise tree over block
    indices, so any parallel schedule reproduces the same floating-point
    result. The final matrix is symmetrized as (G + G^T)/2.
    """
    blocks = [np.ascontiguousarray(b, dtype=np.float64) for b in blocks]
    if not blocks:
        raise ShapeMismatch("no activation blocks given")
    d_in = blocks[0].shape[0]
    total_cols = 0
    for k, b in enumerate(blocks):
        if b.ndim != 2:
            raise ShapeMismatch(f"block {k}: expected 2-D, got ndim={b.ndim}")
        if b.shape[0] != d_in:
            raise ShapeMismatch(
                f"block {k}: {b.shape[0]} rows, expected {d_in}"
            )
        total_cols += b.shape[1]
    if total_cols < 1:
        raise ShapeMismatch("activation blocks hold no columns")

    partials = [b @ b.T for b in blocks]
    g = _pairwise_tree_sum(partials)
    return (g + g.T) / 2.0


def _pairwise_tree_sum(parts):
    # Fixed binary tree: combine neighbours (0,1), (2,3), ... until one left.
    while len(parts) > 1:
        merged = []
        for i in range(0, len(parts) - 1, 2):
            merged.append(parts[i] + parts[i + 1])
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def check_gram(g) -> np.ndarray:
    """Validate that g is a square symmetric float64 matrix."""
    g = np.ascontiguousarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeMismatch(f"Gram matrix must be square, got {g.shape}")
    if not np.array_equal(g, g.T):
        raise ShapeMismatch("Gram matrix is not symmetric")
    return g


def feature_norms(g) -> np.ndarray:
    """Per-feature activation norms sqrt(G_jj), clamped at zero.

    Equals the l2 norm of each activation row of X; feeds the
    activation-aware warm-start scores.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeMismatch(f"Gram matrix must be square, got {g.shape}")
    return np.sqrt(np.maximum(np.diagonal(g), 0.0))


def svd_equivalence_check(x, w_p, tol):
    """Check that compressing X to d_in columns preserves pruning losses.

    Replaces X (d_in x B, B >= d_in) by X' = U @ diag(s) from its singular
    value decomposition and measures two relative discrepancies:
    ||w_p^T X||^2 vs ||w_p^T X'||^2, and X' X'^T vs X X^T. Returns
    (ok, report) where ok means both fall within tol. This is a validation
    utility only; production code accumulates G directly and never
    factorizes X.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    w_p = np.asarray(w_p, dtype=np.float64).ravel()
    if x.ndim != 2:
        raise ShapeMismatch(f"expected 2-D activations, got ndim={x.ndim}")
    d_in, n_cols = x.shape
    if n_cols < d_in:
        raise ShapeMismatch(f"need at least d_in={d_in} columns, got {n_cols}")
    if w_p.shape[0] != d_in:
        raise ShapeMismatch(f"vector length {w_p.shape[0]} != d_in {d_in}")

    try:
        u, s, _ = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(f"SVD did not converge: {exc}") from exc
    x_c = u * s  # d_in x d_in compressed representation

    y = w_p @ x
    y_c = w_p @ x_c
    loss = float(y @ y)
    loss_c = float(y_c @ y_c)
    denom = max(abs(loss), abs(loss_c))
    loss_dev = 0.0 if denom == 0.0 else abs(loss - loss_c) / denom

    g = x @ x.T
    g_c = x_c @ x_c.T
    g_norm = float(np.linalg.norm(g))
    gram_dev = 0.0 if g_norm == 0.0 else float(np.linalg.norm(g_c - g)) / g_norm

    report = {
        "loss_raw": loss,
        "loss_compressed": loss_c,
        "loss_rel_dev": loss_dev,
        "gram_rel_dev": gram_dev,
    }
    return (loss_dev <= tol and gram_dev <= tol), report
