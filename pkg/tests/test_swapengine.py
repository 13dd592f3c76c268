import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import make_correlated_instance, random_feasible_mask
from sparseswaps import errors
from sparseswaps.constraints import BlockNM, PerRow
from sparseswaps.objective import row_loss_gram
from sparseswaps.oracle import is_one_swap_optimal
from sparseswaps.swapengine import (
    RefineConfig,
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

W4 = np.array([10.0, -1.0, 9.0, -9.0])
M4 = np.array([0.0, 0.0, 1.0, 1.0])
G4 = np.ones((4, 4))


# ----------------------------------------------------------- correlation


def test_init_correlation_empty_pruned_set():
    assert np.array_equal(init_correlation(W4, np.ones(4), G4), np.zeros(4))


def test_init_correlation_worked_example():
    assert np.array_equal(init_correlation(W4, M4, G4), np.full(4, 9.0))


def test_init_correlation_matches_brute_sum(rng):
    for _ in range(50):
        w, _, g = make_correlated_instance(rng, 12)
        m = random_feasible_mask(rng, 12, 5)
        c = init_correlation(w, m, g)
        pruned = np.flatnonzero(m == 0.0)
        brute = np.array([sum(w[j] * g[i, j] for j in pruned) for i in range(12)])
        assert_allclose(c, brute, rtol=1e-12, atol=1e-12 * (1 + np.abs(brute).max()))


# ------------------------------------------------------------ swap costs


def test_swap_delta_worked_example():
    c = init_correlation(W4, M4, G4)
    assert swap_delta(3, 1, W4, c, G4, m=M4) == -80.0


def test_swap_delta_zero_weights():
    w = np.array([0.0, 1.0, 0.0])
    m = np.array([0.0, 1.0, 1.0])
    g = np.eye(3)
    c = init_correlation(w, m, g)
    assert swap_delta(2, 0, w, c, g, m=m) == 0.0


def test_swap_delta_membership_validation():
    c = init_correlation(W4, M4, G4)
    with pytest.raises(errors.IndexNotInSet):
        swap_delta(1, 0, W4, c, G4, m=M4)  # 1 is pruned, not kept
    with pytest.raises(errors.IndexNotInSet):
        swap_delta(2, 3, W4, c, G4, m=M4)  # 3 is kept, not pruned


def test_swap_delta_matches_recomputed_difference(rng):
    for _ in range(1000):
        d = 16
        w, _, g = make_correlated_instance(rng, d, n_cols=24)
        m = random_feasible_mask(rng, d, int(rng.integers(1, d)))
        c = init_correlation(w, m, g)
        u = int(rng.choice(np.flatnonzero(m == 1.0)))
        p = int(rng.choice(np.flatnonzero(m == 0.0)))
        m2 = m.copy()
        m2[u], m2[p] = 0.0, 1.0
        direct = row_loss_gram(w, m2, g) - row_loss_gram(w, m, g)
        formula = swap_delta(u, p, w, c, g, m=m)
        assert_allclose(formula, direct, rtol=1e-9, atol=1e-9)


# ------------------------------------------------------------- best swap


def test_best_swap_worked_example():
    state = RowState.from_mask(W4, M4, G4)
    dec = best_swap(state, G4, PerRow(2))
    assert (dec.u, dec.p, dec.delta) == (3, 1, -80.0)


def test_best_swap_no_improvement_on_diagonal():
    w = np.array([1.0, 2.0, 3.0])
    state = RowState.from_mask(w, np.array([0.0, 1.0, 1.0]), np.eye(3))
    dec = best_swap(state, np.eye(3), PerRow(1))
    assert dec.delta == 3.0  # 2^2 - 1^2; positive, so no improving swap exists


def test_best_swap_none_when_degenerate():
    state = RowState.from_mask(W4, np.ones(4), G4)
    assert best_swap(state, G4, PerRow(0)) is None
    state = RowState.from_mask(W4, np.zeros(4), G4)
    assert best_swap(state, G4, PerRow(4)) is None


def test_best_swap_matches_exhaustive(rng):
    for _ in range(100):
        d = 10
        w, _, g = make_correlated_instance(rng, d)
        m = random_feasible_mask(rng, d, int(rng.integers(1, d)))
        state = RowState.from_mask(w, m, g)
        dec = best_swap(state, g, PerRow(int((m == 0).sum())))
        c = init_correlation(w, m, g)
        cands = [
            (swap_delta(u, p, w, c, g), u, p)
            for u in np.flatnonzero(m == 1.0)
            for p in np.flatnonzero(m == 0.0)
        ]
        expected = min(cands, key=lambda t: (t[0], t[1], t[2]))
        assert (dec.delta, dec.u, dec.p) == expected


def test_best_swap_block_constraint_stays_in_block(rng):
    for _ in range(50):
        d = 16
        w, _, g = make_correlated_instance(rng, d)
        m = np.tile([1.0, 1.0, 0.0, 0.0], 4)
        state = RowState.from_mask(w, m, g)
        dec = best_swap(state, g, BlockNM(2, 4))
        assert dec.u // 4 == dec.p // 4
        # matches exhaustive same-block minimum
        c = init_correlation(w, m, g)
        cands = [
            (swap_delta(u, p, w, c, g), u, p)
            for u in np.flatnonzero(m == 1.0)
            for p in np.flatnonzero(m == 0.0)
            if u // 4 == p // 4
        ]
        assert (dec.delta, dec.u, dec.p) == min(cands, key=lambda t: (t[0], t[1], t[2]))


# ------------------------------------------------------------ apply swap


def test_apply_swap_worked_example():
    state = RowState.from_mask(W4, M4, G4)
    dec = best_swap(state, G4, PerRow(2))
    apply_swap(state, dec, G4)
    assert np.array_equal(state.pruned, [0, 3])
    assert row_loss_gram(W4, state.m, G4) == 1.0
    assert np.array_equal(state.c, init_correlation(W4, state.m, G4))


def test_apply_swap_zero_weights_leave_c_unchanged():
    w = np.array([0.0, 1.0, 0.0, 2.0])
    m = np.array([0.0, 1.0, 1.0, 1.0])
    g = np.ones((4, 4))
    state = RowState.from_mask(w, m, g)
    c_before = state.c.copy()
    apply_swap(state, SwapDecision(u=2, p=0, delta=0.0), g)
    assert np.array_equal(state.c, c_before)


def test_apply_swap_validates_sets():
    state = RowState.from_mask(W4, M4, G4)
    with pytest.raises(errors.IndexNotInSet):
        apply_swap(state, SwapDecision(u=0, p=1, delta=0.0), G4)
    with pytest.raises(errors.IndexNotInSet):
        apply_swap(state, SwapDecision(u=2, p=3, delta=0.0), G4)


def test_correlation_drift_after_chained_swaps(rng):
    # 500 applied swaps, then compare the incremental c against recomputation
    d = 64
    w, _, g = make_correlated_instance(rng, d, n_cols=96)
    m = random_feasible_mask(rng, d, 32)
    state = RowState.from_mask(w, m, g)
    for _ in range(500):
        u = int(rng.choice(state.unpruned))
        p = int(rng.choice(state.pruned))
        apply_swap(state, SwapDecision(u=u, p=p, delta=0.0), g)
    fresh = init_correlation(w, state.m, g)
    drift = np.abs(state.c - fresh).max()
    assert drift <= 1e-9 * (1.0 + np.abs(state.c).max())


# ------------------------------------------------------------ refine row


def test_refine_row_worked_example():
    mask, trace = refine_row(W4, M4, G4, PerRow(2), RefineConfig(t_max=10))
    assert np.array_equal(trace, [81.0, 1.0, 0.0])
    assert np.array_equal(mask, [1.0, 1.0, 0.0, 0.0])
    assert is_one_swap_optimal(W4, mask, G4, PerRow(2), 0.0)


def test_refine_row_exactly_two_iterations():
    mask, trace = refine_row(W4, M4, G4, PerRow(2), RefineConfig(t_max=2))
    assert np.array_equal(trace, [81.0, 1.0, 0.0])
    assert row_loss_gram(W4, mask, G4) == 0.0


def test_refine_row_zero_budget():
    mask, trace = refine_row(W4, M4, G4, PerRow(2), RefineConfig(t_max=0))
    assert np.array_equal(mask, M4)
    assert np.array_equal(trace, [81.0])


def test_refine_row_single_iteration():
    _, trace = refine_row(W4, M4, G4, PerRow(2), RefineConfig(t_max=1))
    assert np.array_equal(trace, [81.0, 1.0])


def test_refine_row_reaches_local_optimum(rng):
    for _ in range(30):
        d = 12
        w, _, g = make_correlated_instance(rng, d)
        m = random_feasible_mask(rng, d, 6)
        mask, trace = refine_row(w, m, g, PerRow(6), RefineConfig(t_max=d * d))
        assert is_one_swap_optimal(w, mask, g, PerRow(6), 0.0)
        assert np.all(np.diff(trace) < 0.0)  # strictly decreasing


def test_refine_row_monotone_trace_with_threshold(rng):
    w, _, g = make_correlated_instance(rng, 24)
    m = random_feasible_mask(rng, 24, 12)
    eps = 1e-3
    _, trace = refine_row(w, m, g, PerRow(12), RefineConfig(t_max=100, accept_threshold=eps))
    assert np.all(np.diff(trace) < -eps)


def test_refine_row_infeasible_warmstart():
    with pytest.raises(errors.InfeasibleWarmstart):
        refine_row(W4, M4, G4, PerRow(3), RefineConfig(t_max=1))


def test_refine_row_deterministic(rng):
    w, _, g = make_correlated_instance(rng, 20)
    m = random_feasible_mask(rng, 20, 10)
    a = refine_row(w, m, g, PerRow(10), RefineConfig(t_max=50))
    b = refine_row(w.copy(), m.copy(), g.copy(), PerRow(10), RefineConfig(t_max=50))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_refine_row_block_constraint_feasible_throughout(rng):
    d = 16
    w, _, g = make_correlated_instance(rng, d)
    m = np.tile([1.0, 0.0, 1.0, 0.0], 4)
    mask, trace = refine_row(w, m, g, BlockNM(2, 4), RefineConfig(t_max=100))
    blocked = mask.reshape(4, 4)
    assert np.all(blocked.sum(axis=1) == 2.0)
    assert trace[-1] <= trace[0]


def test_refine_config_validation():
    with pytest.raises(ValueError):
        RefineConfig(t_max=-1)
    with pytest.raises(ValueError):
        RefineConfig(t_max=1, accept_threshold=-0.5)


# --------------------------------------------------------- refine matrix


def test_refine_matrix_nothing_to_prune():
    weights = np.vstack([W4, W4])
    mask, report = refine_matrix(
        weights, np.ones((2, 4)), G4, PerRow(0), RefineConfig(t_max=5)
    )
    assert np.array_equal(mask, np.ones((2, 4)))
    assert report.total_before == report.total_after == 0.0
    assert all(r.swaps == 0 for r in report.rows)
    assert report.mean_reduction_pct is None


def test_refine_matrix_two_worked_rows():
    weights = np.vstack([W4, W4])
    m0 = np.vstack([M4, M4])
    mask, report = refine_matrix(weights, m0, G4, PerRow(2), RefineConfig(t_max=10))
    assert report.total_before == 162.0
    assert report.total_after == 0.0
    assert all(r.loss_after == 0.0 for r in report.rows)
    assert all(r.reduction_pct == 100.0 for r in report.rows)


def test_refine_matrix_improves_wanda_warmstart(rng):
    from sparseswaps.warmstart import score_wanda, select_mask

    d_out, d_in = 32, 64
    _, x, g = make_correlated_instance(rng, d_in, n_cols=128, rank=4)
    weights = rng.standard_normal((d_out, d_in))
    warm = select_mask(score_wanda(weights, g), PerRow(32))
    mask, report = refine_matrix(weights, warm, g, PerRow(32), RefineConfig(t_max=d_in * d_in))
    assert report.total_after <= report.total_before
    for i in range(d_out):
        assert is_one_swap_optimal(weights[i], mask[i], g, PerRow(32), 0.0)


def test_refine_matrix_thread_count_invariant(rng):
    weights = rng.standard_normal((8, 24))
    _, _, g = make_correlated_instance(rng, 24)
    m0 = np.vstack([random_feasible_mask(rng, 24, 12) for _ in range(8)])
    a = refine_matrix(weights, m0, g, PerRow(12), RefineConfig(t_max=40), threads=1)
    b = refine_matrix(weights, m0, g, PerRow(12), RefineConfig(t_max=40), threads=8)
    assert np.array_equal(a[0], b[0])
    assert [r.loss_after for r in a[1].rows] == [r.loss_after for r in b[1].rows]


def test_refine_matrix_reports_offending_row():
    weights = np.vstack([W4, W4])
    bad = np.vstack([M4, np.array([0.0, 0.0, 0.0, 1.0])])
    with pytest.raises(errors.InfeasibleWarmstart) as info:
        refine_matrix(weights, bad, G4, PerRow(2), RefineConfig(t_max=1))
    assert info.value.row == 1


def test_refine_matrix_report_totals_are_row_sums(rng):
    weights = rng.standard_normal((6, 16))
    _, _, g = make_correlated_instance(rng, 16)
    m0 = np.vstack([random_feasible_mask(rng, 16, 8) for _ in range(6)])
    _, report = refine_matrix(weights, m0, g, PerRow(8), RefineConfig(t_max=20))
    acc_b = 0.0
    acc_a = 0.0
    for r in report.rows:
        acc_b += r.loss_before
        acc_a += r.loss_after
    assert report.total_before == acc_b
    assert report.total_after == acc_a


# ------------------------------------------------- separate-selection demo


def test_greedy_separate_worked_example():
    mask, loss = greedy_separate_baseline(W4, M4, G4)
    assert loss == 100.0  # worse than the 81 it started from
    assert np.array_equal(np.flatnonzero(mask == 0.0), [1, 3])


def test_greedy_separate_agrees_with_joint_on_diagonal(rng):
    for _ in range(20):
        d = 8
        w = rng.standard_normal(d)
        g = np.diag(np.abs(rng.standard_normal(d)) + 0.5)
        m = random_feasible_mask(rng, d, 4)
        sep_mask, sep_loss = greedy_separate_baseline(w, m, g)
        state = RowState.from_mask(w, m, g)
        dec = best_swap(state, g, PerRow(4))
        joint_loss = row_loss_gram(w, m, g) + dec.delta
        assert_allclose(sep_loss, joint_loss, rtol=1e-12, atol=1e-12)


def test_joint_never_worse_than_separate(rng):
    for _ in range(100):
        d = 10
        w, _, g = make_correlated_instance(rng, d)
        m = random_feasible_mask(rng, d, 5)
        _, sep_loss = greedy_separate_baseline(w, m, g)
        state = RowState.from_mask(w, m, g)
        dec = best_swap(state, g, PerRow(5))
        base = row_loss_gram(w, m, g)
        assert base + dec.delta <= sep_loss + 1e-9 * (1.0 + abs(sep_loss))


def test_greedy_separate_empty_sets():
    with pytest.raises(errors.EmptySet):
        greedy_separate_baseline(W4, np.ones(4), G4)
    with pytest.raises(errors.EmptySet):
        greedy_separate_baseline(W4, np.zeros(4), G4)
