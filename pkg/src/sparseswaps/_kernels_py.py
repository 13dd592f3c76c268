"""NumPy implementation of the row refinement kernel.

Fallback used when the compiled extension is unavailable; also the easiest
place to read the algorithm. Semantics are identical to the compiled
kernel: same candidate ordering, same tie-breaking, same update formulas,
and the elementwise arithmetic is written in the same operation order.
"""

import numpy as np

BACKEND_NAME = "python"


def refine_row(w, m, g, block_size, budget, eps):
    """Greedily apply best improving swaps to one row's mask.

    Starting from mask `m`, repeatedly evaluates every feasible (kept,
    pruned) exchange through the correlation vector, applies the one with
    the most negative loss change, and stops at a local optimum, when no
    feasible pair exists, or after `budget` accepted swaps. With
    block_size > 0 candidate pairs never leave their aligned block.

    Returns (m_out, loss0, deltas, pairs, converged) where converged means
    "no feasible swap improves by more than eps"; the caller may re-invoke
    with the returned mask when the budget was the binding stop.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    m_out = np.array(m, dtype=np.float64, copy=True)
    g = np.ascontiguousarray(g, dtype=np.float64)
    d = w.shape[0]

    v = (1.0 - m_out) * w
    c = g @ v
    loss0 = float(v @ c)

    deltas = np.empty(budget, dtype=np.float64)
    pairs = np.empty((budget, 2), dtype=np.int64)
    g_diag = np.diagonal(g)
    stat = w * w * g_diag  # constant part of both swap-score vectors

    n_swaps = 0
    converged = False
    while n_swaps < budget:
        twc = 2.0 * w * c
        gain_keep = twc + stat    # loss change of pruning a kept index, vs residual
        gain_prune = stat - twc   # loss change of unpruning a pruned index

        found = _best_pair(w, m_out, g, block_size, gain_keep, gain_prune)
        if found is None:
            converged = True
            break
        u, p, delta = found
        if not delta < -eps:
            converged = True
            break

        c += w[u] * g[u] - w[p] * g[p]
        m_out[u] = 0.0
        m_out[p] = 1.0
        deltas[n_swaps] = delta
        pairs[n_swaps, 0] = u
        pairs[n_swaps, 1] = p
        n_swaps += 1

    return m_out, loss0, deltas[:n_swaps].copy(), pairs[:n_swaps].copy(), converged


def _best_pair(w, m, g, block_size, gain_keep, gain_prune):
    """Minimum-delta feasible pair, ties to the lexicographically smallest."""
    if block_size <= 0:
        kept = np.flatnonzero(m == 1.0)
        pruned = np.flatnonzero(m == 0.0)
        if kept.size == 0 or pruned.size == 0:
            return None
        table = (
            gain_keep[kept][:, np.newaxis]
            + gain_prune[pruned][np.newaxis, :]
            - 2.0 * np.outer(w[kept], w[pruned]) * g[np.ix_(kept, pruned)]
        )
        # argmin returns the first occurrence in row-major order, which with
        # ascending kept/pruned indices is the lexicographic tie-break.
        flat = int(np.argmin(table))
        i, j = divmod(flat, pruned.size)
        return int(kept[i]), int(pruned[j]), float(table[i, j])

    d = w.shape[0]
    n_blocks = d // block_size
    blocked = m.reshape(n_blocks, block_size)
    n_keep = int(np.count_nonzero(blocked[0] == 1.0))
    if n_keep == 0 or n_keep == block_size:
        return None
    # Stable sort puts kept indices (value -1) before pruned (0), each group
    # in ascending column order; feasible masks have equal counts per block.
    order = np.argsort(-blocked, axis=1, kind="stable")
    offsets = (np.arange(n_blocks) * block_size)[:, np.newaxis]
    kept = order[:, :n_keep] + offsets
    pruned = order[:, n_keep:] + offsets
    table = (
        gain_keep[kept][:, :, np.newaxis]
        + gain_prune[pruned][:, np.newaxis, :]
        - 2.0 * (w[kept][:, :, np.newaxis] * w[pruned][:, np.newaxis, :])
        * g[kept[:, :, np.newaxis], pruned[:, np.newaxis, :]]
    )
    flat = int(np.argmin(table))
    b, rest = divmod(flat, table.shape[1] * table.shape[2])
    i, j = divmod(rest, table.shape[2])
    return int(kept[b, i]), int(pruned[b, j]), float(table[b, i, j])
