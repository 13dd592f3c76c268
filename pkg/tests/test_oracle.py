import numpy as np
import pytest

from conftest import make_correlated_instance, random_feasible_mask
from sparseswaps import errors
from sparseswaps.constraints import BlockNM, PerRow
from sparseswaps.objective import row_loss_gram
from sparseswaps.oracle import (
    brute_force_row,
    enumerate_swap_deltas,
    is_one_swap_optimal,
)
from sparseswaps.swapengine import RefineConfig, refine_row
from sparseswaps.warmstart import score_wanda, select_mask

W4 = np.array([10.0, -1.0, 9.0, -9.0])
M4 = np.array([0.0, 0.0, 1.0, 1.0])
G4 = np.ones((4, 4))


def test_brute_force_worked_example():
    result = brute_force_row(W4, G4, PerRow(2))
    assert result.best_loss == 0.0
    assert result.n_evaluated == 6  # C(4, 2)
    assert np.array_equal(np.flatnonzero(result.best_mask == 0.0), [2, 3])


def test_brute_force_nothing_pruned():
    result = brute_force_row(W4, G4, PerRow(0))
    assert result.best_loss == 0.0
    assert result.n_evaluated == 1
    assert np.array_equal(result.best_mask, np.ones(4))


def test_brute_force_counts_block_masks(rng):
    w, _, g = make_correlated_instance(rng, 8)
    result = brute_force_row(w, g, BlockNM(2, 4))
    assert result.n_evaluated == 36  # C(4,2)^2
    assert result.best_loss == row_loss_gram(w, result.best_mask, g)
    blocked = result.best_mask.reshape(2, 4)
    assert np.all((blocked == 1.0).sum(axis=1) == 2)


def test_brute_force_block_optimum_beats_per_block_greedy(rng):
    # cross terms couple the blocks, so the oracle must enumerate the cross
    # product; verify it is at least as good as any single-block change
    w, _, g = make_correlated_instance(rng, 8, rank=2)
    result = brute_force_row(w, g, BlockNM(2, 4))
    assert is_one_swap_optimal(w, result.best_mask, g, BlockNM(2, 4), 1e-12)


def test_brute_force_too_large():
    with pytest.raises(errors.TooLarge):
        brute_force_row(np.zeros(64), np.eye(64), PerRow(32))
    with pytest.raises(errors.TooLarge):
        brute_force_row(np.zeros(128), np.eye(128), BlockNM(2, 4))


def test_sandwich_property(rng):
    # oracle <= refined <= warmstart over 200 seeded instances
    for _ in range(200):
        d = 10
        w, _, g = make_correlated_instance(rng, d, rank=3)
        warm = select_mask(score_wanda(w[None, :], g), PerRow(5))[0]
        refined, _ = refine_row(w, warm, g, PerRow(5), RefineConfig(t_max=200))
        loss_warm = row_loss_gram(w, warm, g)
        loss_ref = row_loss_gram(w, refined, g)
        loss_opt = brute_force_row(w, g, PerRow(5)).best_loss
        assert loss_opt <= loss_ref <= loss_warm


def test_is_one_swap_optimal_worked_example():
    final = np.array([1.0, 1.0, 0.0, 0.0])
    assert is_one_swap_optimal(W4, final, G4, PerRow(2), 0.0)
    assert not is_one_swap_optimal(W4, M4, G4, PerRow(2), 0.0)


def test_is_one_swap_optimal_magnitude_on_identity():
    w = np.array([0.1, -3.0, 0.2, 5.0])
    m = np.array([0.0, 1.0, 0.0, 1.0])  # smallest |w| pruned
    assert is_one_swap_optimal(w, m, np.eye(4), PerRow(2), 0.0)
    assert not is_one_swap_optimal(w, np.array([1.0, 0.0, 0.0, 1.0]), np.eye(4), PerRow(2), 0.0)


def test_enumerate_swap_deltas_worked_example():
    table = enumerate_swap_deltas(W4, M4, G4, PerRow(2))
    assert [(u, p) for u, p, _, _ in table] == [(2, 0), (2, 1), (3, 0), (3, 1)]
    assert [direct for _, _, direct, _ in table] == [-17.0, 280.0, 19.0, -80.0]
    assert [formula for _, _, _, formula in table] == [-17.0, 280.0, 19.0, -80.0]


def test_enumerate_swap_deltas_empty_when_nothing_pruned():
    assert enumerate_swap_deltas(W4, np.ones(4), G4, PerRow(0)) == []


def test_enumerate_swap_deltas_agreement(rng):
    worst = 0.0
    for _ in range(50):
        d = 16
        w, _, g = make_correlated_instance(rng, d)
        m = random_feasible_mask(rng, d, 8)
        for _, _, direct, formula in enumerate_swap_deltas(w, m, g, PerRow(8)):
            scale = max(abs(direct), abs(formula), 1.0)
            worst = max(worst, abs(direct - formula) / scale)
    assert worst < 1e-9


def test_enumerate_swap_deltas_block_pairs_only(rng):
    w, _, g = make_correlated_instance(rng, 8)
    m = np.tile([1.0, 0.0, 1.0, 0.0], 2)
    table = enumerate_swap_deltas(w, m, g, BlockNM(2, 4))
    assert table
    for u, p, _, _ in table:
        assert u // 4 == p // 4


def test_engine_termination_is_oracle_certified(rng):
    for _ in range(30):
        d = 12
        w, _, g = make_correlated_instance(rng, d)
        m = random_feasible_mask(rng, d, 6)
        refined, trace = refine_row(w, m, g, PerRow(6), RefineConfig(t_max=144))
        assert len(trace) - 1 < 144  # stopped on its own
        assert is_one_swap_optimal(w, refined, g, PerRow(6), 0.0)
