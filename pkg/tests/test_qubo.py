import itertools

import numpy as np
import pytest

from panomerge import (
    AnnealConfig,
    QuboInstance,
    build_qubo,
    flip_delta,
    objective,
    pairwise_overlap,
    solve_anneal,
    solve_exact,
    weighted_area,
)

from conftest import make_mask_set, random_mask_set


def random_instance(rng, m):
    lin = rng.random(m) * 10.0
    quad = rng.random((m, m)) * 4.0
    quad = (quad + quad.T) / 2.0
    np.fill_diagonal(quad, 0.0)
    return QuboInstance(lin, quad, penalty=2.0)


class TestBuildQubo:
    def test_disjoint_unit_masks(self):
        values = np.zeros((2, 1, 1, 2))
        values[0, 0, 0, 0] = 1.0
        values[1, 0, 0, 1] = 1.0
        q = build_qubo(make_mask_set(values), penalty=2.0)
        assert q.linear.tolist() == [1.0, 1.0]
        assert q.quadratic[0, 1] == 0.0

    def test_identical_masks_overlap_equals_area(self):
        values = np.tile(np.full((1, 1, 3, 3), 0.5), (2, 1, 1, 1))
        masks = make_mask_set(values)
        q = build_qubo(masks)
        assert q.quadratic[0, 1] == pytest.approx(weighted_area(masks, 0))

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(2)
        masks = random_mask_set(rng, m=3)
        q = build_qubo(masks, penalty=1.5)
        for i in range(3):
            assert q.linear[i] == pytest.approx(weighted_area(masks, i), abs=1e-12)
            for j in range(3):
                if i != j:
                    assert q.quadratic[i, j] == pytest.approx(
                        pairwise_overlap(masks, i, j), abs=1e-12
                    )

    def test_penalty_must_exceed_one(self):
        with pytest.raises(ValueError):
            build_qubo(make_mask_set(np.ones((1, 1, 2, 2))), penalty=1.0)


class TestObjective:
    def test_empty_selection_is_zero(self):
        rng = np.random.default_rng(0)
        q = random_instance(rng, 5)
        assert objective(q, np.zeros(5)) == 0.0

    def test_single_bit_is_linear_weight(self):
        rng = np.random.default_rng(1)
        q = random_instance(rng, 5)
        u = np.zeros(5)
        u[3] = 1
        assert objective(q, u) == pytest.approx(q.linear[3])

    def test_two_identical_masks_cancel(self):
        area = 9.0
        q = QuboInstance([area, area], [[0.0, area], [area, 0.0]], penalty=2.0)
        assert objective(q, [1, 1]) == pytest.approx(0.0)

    def test_length_mismatch(self):
        q = QuboInstance([1.0], [[0.0]])
        with pytest.raises(ValueError):
            objective(q, [1, 0])


class TestFlipDelta:
    def test_flip_on_from_empty(self):
        rng = np.random.default_rng(4)
        q = random_instance(rng, 6)
        u = np.zeros(6)
        for i in range(6):
            assert flip_delta(q, u, i) == pytest.approx(q.linear[i])

    def test_flip_off_isolated_bit(self):
        q = QuboInstance([3.0, 1.0], np.zeros((2, 2)))
        u = np.array([1.0, 0.0])
        assert flip_delta(q, u, 0) == pytest.approx(-3.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_recompute_both_oracle(self, seed):
        rng = np.random.default_rng(seed)
        q = random_instance(rng, 8)
        u = (rng.random(8) < 0.5).astype(float)
        for i in range(8):
            flipped = u.copy()
            flipped[i] = 1.0 - flipped[i]
            expected = objective(q, flipped) - objective(q, u)
            assert flip_delta(q, u, i) == pytest.approx(expected, abs=1e-9)


class TestSolveExact:
    def test_single_variable(self):
        q = QuboInstance([5.0], [[0.0]])
        result = solve_exact(q)
        assert result.bits.tolist() == [True]
        assert result.objective == 5.0

    def test_identical_masks_tie_break(self):
        area = 7.0
        q = QuboInstance([area, area], [[0.0, area], [area, 0.0]], penalty=2.0)
        result = solve_exact(q)
        assert result.bits.tolist() == [True, False]
        assert result.objective == pytest.approx(area)

    def test_beats_every_enumerated_assignment(self):
        rng = np.random.default_rng(9)
        q = random_instance(rng, 8)
        best = solve_exact(q)
        for bits in itertools.product([0, 1], repeat=8):
            assert best.objective >= objective(q, np.array(bits)) - 1e-12

    def test_guard_on_large_m(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            solve_exact(random_instance(rng, 25))


class TestSolveAnneal:
    def test_single_positive_variable(self):
        q = QuboInstance([5.0], [[0.0]])
        for seed in (0, 1, 42):
            result = solve_anneal(q, AnnealConfig(seed=seed))
            assert result.bits.tolist() == [True]

    def test_all_zero_weights_select_nothing(self):
        q = QuboInstance(np.zeros(6), np.zeros((6, 6)))
        result = solve_anneal(q)
        assert not result.bits.any()
        assert result.objective == 0.0

    @pytest.mark.parametrize("seed", range(20))
    def test_near_optimal_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        q = random_instance(rng, 10)
        exact = solve_exact(q)
        annealed = solve_anneal(q)
        assert annealed.objective >= 0.99 * exact.objective

    @pytest.mark.parametrize("seed", range(10))
    def test_output_is_single_flip_optimal(self, seed):
        rng = np.random.default_rng(100 + seed)
        q = random_instance(rng, 12)
        result = solve_anneal(q)
        u = result.bits.astype(float)
        for i in range(12):
            assert flip_delta(q, u, i) <= 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        q = random_instance(rng, 12)
        cfg = AnnealConfig(seed=3, sweeps=50)
        a = solve_anneal(q, cfg)
        b = solve_anneal(q, cfg)
        assert np.array_equal(a.bits, b.bits)
        assert a.objective == b.objective


class TestProperties:
    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_argmax_scale_invariance(self, c):
        rng = np.random.default_rng(31)
        masks = random_mask_set(rng, m=6)
        q1 = build_qubo(masks)
        q2 = build_qubo(make_mask_set(np.clip(masks.values * c, 0.0, 1.0)))
        if c <= 1.0:  # clipping would change the instance above 1
            assert np.array_equal(solve_exact(q1).bits, solve_exact(q2).bits)
        scaled = QuboInstance(q1.linear * c, q1.quadratic * c, q1.penalty)
        assert np.array_equal(solve_exact(q1).bits, solve_exact(scaled).bits)

    def test_monotone_penalty_forbids_identical_pair(self):
        area = 12.0
        for penalty in (1.01, 2.0, 5.0):
            q = QuboInstance([area, area], [[0.0, area], [area, 0.0]], penalty)
            result = solve_exact(q)
            assert result.bits.sum() == 1
            assert objective(q, [1, 1]) < objective(q, [1, 0])

    def test_disjoint_positive_masks_select_all(self):
        q = QuboInstance([3.0, 1.0, 2.0], np.zeros((3, 3)))
        assert solve_exact(q).bits.all()
        assert solve_anneal(q).bits.all()
