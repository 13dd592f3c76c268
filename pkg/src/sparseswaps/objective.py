"""Exact evaluation of the masked reconstruction loss.

Two routes exist on purpose: the Gram quadratic form used everywhere in
production, and a direct activation-based recomputation kept as an
independent cross-check. Both are exact up to double rounding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch


@dataclass(frozen=True)
class RowLossBreakdown:
    row_index: int
    loss: float
    pruned_count: int


def row_loss_gram(w, m, g) -> float:
    """Loss of one masked row as v^T (G v) with v = (1 - m) * w."""
    w = np.asarray(w, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    g = np.asarray(g, dtype=np.float64)
    d = w.shape[0]
    if m.shape[0] != d:
        raise ShapeMismatch(f"mask length {m.shape[0]} != weight length {d}")
    if g.shape != (d, d):
        raise ShapeMismatch(f"Gram shape {g.shape} incompatible with d_in={d}")
    v = (1.0 - m) * w
    return float(v @ (g @ v))


def row_loss_direct(w, m, x) -> float:
    """Same loss recomputed straight from activations: ||v^T X||^2.

    Test oracle only; quadratic in B instead of d_in and therefore never on
    the refinement path.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64)
    d = w.shape[0]
    if m.shape[0] != d:
        raise ShapeMismatch(f"mask length {m.shape[0]} != weight length {d}")
    if x.ndim != 2 or x.shape[0] != d:
        raise ShapeMismatch(f"activation shape {x.shape} incompatible with d_in={d}")
    y = ((1.0 - m) * w) @ x
    return float(y @ y)


def full_loss(weights, mask, g):
    """Total masked loss of a layer plus its per-row breakdown.

    The total is the plain row-major sum of the per-row quadratic forms, so
    it matches the breakdown exactly, not just within rounding.
    """
    weights = np.asarray(weights, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if weights.ndim != 2:
        raise ShapeMismatch(f"expected 2-D weights, got ndim={weights.ndim}")
    if mask.shape != weights.shape:
        raise ShapeMismatch(f"mask shape {mask.shape} != weights shape {weights.shape}")
    d = weights.shape[1]
    if g.shape != (d, d):
        raise ShapeMismatch(f"Gram shape {g.shape} incompatible with d_in={d}")

    breakdown = []
    total = 0.0
    for i in range(weights.shape[0]):
        loss = row_loss_gram(weights[i], mask[i], g)
        total += loss
        breakdown.append(
            RowLossBreakdown(
                row_index=i,
                loss=loss,
                pruned_count=int(np.count_nonzero(mask[i] == 0.0)),
            )
        )
    return total, breakdown
