# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row refinement kernel.

Mirrors _kernels_py.refine_row exactly: same candidate ordering, same
tie-breaking, same operation order in the swap-cost arithmetic. The scan
over candidate pairs and the correlation updates run without the GIL, so
rows can be refined on real threads.
"""

import numpy as np

BACKEND_NAME = "compiled"

cdef double INF = float("inf")


cdef Py_ssize_t _scan_range(double* w, double* m, double* g, Py_ssize_t d,
                            Py_ssize_t start, Py_ssize_t stop,
                            double* gain_keep, double* gain_prune,
                            Py_ssize_t* idx_buf,
                            double* best, Py_ssize_t* best_u,
                            Py_ssize_t* best_p) noexcept nogil:
    """Scan all (kept, pruned) pairs with both indices in [start, stop)."""
    cdef Py_ssize_t j, i, k, u, p, n_kept, n_pruned
    cdef double wu, gk_u, delta

    n_kept = 0
    n_pruned = 0
    # kept indices ascend from idx_buf[0], pruned descend from idx_buf[stop-start-1]
    for j in range(start, stop):
        if m[j] == 1.0:
            idx_buf[n_kept] = j
            n_kept += 1
        else:
            n_pruned += 1
            idx_buf[stop - start - n_pruned] = j
    if n_kept == 0 or n_pruned == 0:
        return 0

    for i in range(n_kept):
        u = idx_buf[i]
        wu = w[u]
        gk_u = gain_keep[u]
        # pruned indices ascend when read from the tail backwards
        for k in range(n_pruned):
            p = idx_buf[stop - start - 1 - k]
            delta = gk_u + gain_prune[p] - 2.0 * wu * w[p] * g[u * d + p]
            if delta < best[0]:
                best[0] = delta
                best_u[0] = u
                best_p[0] = p
    return 1


def refine_row(w_in, m_in, g_in, block_size, budget, eps):
    """See _kernels_py.refine_row; identical contract and semantics."""
    cdef double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    m_out_arr = np.array(m_in, dtype=np.float64, copy=True)
    cdef double[::1] m = m_out_arr
    cdef double[:, ::1] g2 = np.ascontiguousarray(g_in, dtype=np.float64)
    cdef Py_ssize_t d = w.shape[0]
    cdef Py_ssize_t blk = block_size
    cdef Py_ssize_t t_budget = budget
    cdef double eps_c = eps

    c_arr = np.empty(d, dtype=np.float64)
    gain_keep_arr = np.empty(d, dtype=np.float64)
    gain_prune_arr = np.empty(d, dtype=np.float64)
    stat_arr = np.empty(d, dtype=np.float64)
    idx_arr = np.empty(d, dtype=np.intp)
    deltas_arr = np.empty(max(t_budget, 0), dtype=np.float64)
    pairs_arr = np.empty((max(t_budget, 0), 2), dtype=np.int64)

    cdef double[::1] c = c_arr
    cdef double[::1] gain_keep = gain_keep_arr
    cdef double[::1] gain_prune = gain_prune_arr
    cdef double[::1] stat = stat_arr
    cdef Py_ssize_t[::1] idx_buf = idx_arr
    cdef double[::1] deltas = deltas_arr
    cdef long long[:, ::1] pairs = pairs_arr

    cdef double* wp_ = &w[0]
    cdef double* mp_ = &m[0]
    cdef double* gp_ = &g2[0, 0]
    cdef double* cp_ = &c[0]
    cdef double* gkp = &gain_keep[0]
    cdef double* gpp = &gain_prune[0]

    cdef Py_ssize_t i, j, b, n_blocks, found, best_u, best_p, n_swaps
    cdef double acc, twc, best, wu, wpv, loss0
    cdef bint converged = 0

    with nogil:
        # c = G @ ((1 - m) * w); loss0 = v . c
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += gp_[i * d + j] * ((1.0 - mp_[j]) * wp_[j])
            cp_[i] = acc
        loss0 = 0.0
        for j in range(d):
            loss0 += ((1.0 - mp_[j]) * wp_[j]) * cp_[j]
        for j in range(d):
            stat[j] = (wp_[j] * wp_[j]) * gp_[j * d + j]

        n_blocks = d // blk if blk > 0 else 1
        n_swaps = 0
        while n_swaps < t_budget:
            for j in range(d):
                twc = (2.0 * wp_[j]) * cp_[j]
                gkp[j] = twc + stat[j]
                gpp[j] = stat[j] - twc
            best = INF
            best_u = -1
            best_p = -1
            found = 0
            if blk <= 0:
                found = _scan_range(wp_, mp_, gp_, d, 0, d,
                                    gkp, gpp, &idx_buf[0],
                                    &best, &best_u, &best_p)
            else:
                for b in range(n_blocks):
                    found |= _scan_range(wp_, mp_, gp_, d,
                                         b * blk, (b + 1) * blk,
                                         gkp, gpp, &idx_buf[0],
                                         &best, &best_u, &best_p)
            if found == 0 or not best < -eps_c:
                converged = 1
                break
            wu = wp_[best_u]
            wpv = wp_[best_p]
            for i in range(d):
                cp_[i] += wu * gp_[best_u * d + i] - wpv * gp_[best_p * d + i]
            mp_[best_u] = 0.0
            mp_[best_p] = 1.0
            deltas[n_swaps] = best
            pairs[n_swaps, 0] = best_u
            pairs[n_swaps, 1] = best_p
            n_swaps += 1

    return (
        m_out_arr,
        loss0,
        deltas_arr[:n_swaps].copy(),
        pairs_arr[:n_swaps].copy(),
        bool(converged),
    )
