"""Brute-force certification of the swap engine on small instances.

Everything here evaluates masks through row_loss_gram only and never calls
the engine's incremental swap-cost formula, so agreement between the two is
meaningful evidence rather than a tautology.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .constraints import PerRow, validate_constraint
from .errors import TooLarge
from .objective import row_loss_gram

MAX_PERROW_MASKS = 10**6
MAX_BLOCK_MASKS = 2**20


@dataclass(frozen=True)
class OracleResult:
    best_mask: np.ndarray
    best_loss: float
    n_evaluated: int


def brute_force_row(w, g, constraint) -> OracleResult:
    """Globally optimal feasible mask by exhaustive enumeration.

    Pruned index sets are enumerated in lexicographic order and the first
    minimum encountered is kept, so results are reproducible. Raises
    TooLarge when the feasible set exceeds the enumeration budget.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    g = np.asarray(g, dtype=np.float64)
    d = w.shape[0]
    validate_constraint(constraint, d)

    if isinstance(constraint, PerRow):
        count = math.comb(d, constraint.prune_count)
        if count > MAX_PERROW_MASKS:
            raise TooLarge(f"{count} feasible masks exceed {MAX_PERROW_MASKS}")
        pruned_sets = itertools.combinations(range(d), constraint.prune_count)
    else:
        per_block = math.comb(
            constraint.m_block, constraint.m_block - constraint.n_keep
        )
        n_blocks = d // constraint.m_block
        count = per_block**n_blocks
        if count > MAX_BLOCK_MASKS:
            raise TooLarge(f"{count} feasible masks exceed {MAX_BLOCK_MASKS}")
        # Block choices interact through G cross terms, so the cross product
        # over blocks must be enumerated; per-block optima do not compose.
        block_choices = []
        for b in range(n_blocks):
            base = b * constraint.m_block
            block_choices.append(
                [
                    tuple(base + i for i in combo)
                    for combo in itertools.combinations(
                        range(constraint.m_block),
                        constraint.m_block - constraint.n_keep,
                    )
                ]
            )
        pruned_sets = (
            tuple(itertools.chain.from_iterable(parts))
            for parts in itertools.product(*block_choices)
        )

    best_mask = None
    best_loss = math.inf
    n_evaluated = 0
    mask = np.empty(d, dtype=np.float64)
    for pruned in pruned_sets:
        mask.fill(1.0)
        mask[list(pruned)] = 0.0
        loss = row_loss_gram(w, mask, g)
        n_evaluated += 1
        if loss < best_loss:
            best_loss = loss
            best_mask = mask.copy()
    return OracleResult(best_mask=best_mask, best_loss=best_loss, n_evaluated=n_evaluated)


def _feasible_pairs(m, constraint):
    """All (kept, pruned) exchanges allowed by the constraint, in lex order."""
    d = m.shape[0]
    if isinstance(constraint, PerRow):
        segs = [(0, d)]
    else:
        segs = [
            (s, s + constraint.m_block)
            for s in range(0, d, constraint.m_block)
        ]
    for start, stop in segs:
        kept = [j for j in range(start, stop) if m[j] == 1.0]
        pruned = [j for j in range(start, stop) if m[j] == 0.0]
        for u in kept:
            for p in pruned:
                yield u, p


def is_one_swap_optimal(w, m, g, constraint, eps) -> bool:
    """True iff no feasible single swap lowers the loss by more than eps.

    Each neighbour mask is evaluated from scratch with row_loss_gram,
    independently of the engine's delta formula.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    g = np.asarray(g, dtype=np.float64)
    base = row_loss_gram(w, m, g)
    trial = np.empty_like(m)
    for u, p in _feasible_pairs(m, constraint):
        np.copyto(trial, m)
        trial[u] = 0.0
        trial[p] = 1.0
        if row_loss_gram(w, trial, g) - base < -eps:
            return False
    return True


def enumerate_swap_deltas(w, m, g, constraint):
    """All feasible swaps with their loss change computed both ways.

    Returns a list of (u, p, delta_direct, delta_formula) rows where
    delta_direct recomputes both losses from scratch and delta_formula uses
    the engine's correlation-vector expression; used to validate the latter.
    """
    from .swapengine import init_correlation, swap_delta

    w = np.asarray(w, dtype=np.float64).ravel()
    m = np.asarray(m, dtype=np.float64).ravel()
    g = np.asarray(g, dtype=np.float64)
    base = row_loss_gram(w, m, g)
    c = init_correlation(w, m, g)
    rows = []
    trial = np.empty_like(m)
    for u, p in _feasible_pairs(m, constraint):
        np.copyto(trial, m)
        trial[u] = 0.0
        trial[p] = 1.0
        direct = row_loss_gram(w, trial, g) - base
        rows.append((u, p, direct, swap_delta(u, p, w, c, g)))
    return rows
