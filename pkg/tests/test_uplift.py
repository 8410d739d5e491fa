import numpy as np
import pytest

from panomerge import (
    ClassTable,
    PanopticMap,
    SceneSpec,
    SplatWeightTable,
    generate_scene,
    merge_qubo,
    render_labels,
    scene_pq,
    uplift_labels,
)


def table2():
    return ClassTable(("a", "b"), (True, False))


def simple_labels(inst):
    inst = np.asarray(inst)
    ids = set(np.unique(inst).tolist()) - {0}
    return PanopticMap.from_instances(inst, {i: 0 for i in ids}, table2())


def make_table(records, num_splats, num_views, h, w):
    records = np.asarray(records, dtype=np.float64)
    return SplatWeightTable(
        num_splats=num_splats,
        num_views=num_views,
        height=h,
        width=w,
        splat_ids=records[:, 0],
        views=records[:, 1],
        pixels=records[:, 2],
        weights=records[:, 3],
    )


class TestUpliftLabels:
    def test_single_label_support_is_one_hot(self):
        inst = np.full((1, 2, 2), 3)
        labels = simple_labels(inst)
        weights = make_table(
            [[0, 0, 0, 1.0], [0, 0, 1, 0.5]], 1, 1, 2, 2
        )
        field = uplift_labels(labels, weights)
        expected = np.zeros(4)
        expected[3] = 1.0
        assert np.allclose(field.distributions[0], expected)

    def test_weighted_mixture(self):
        inst = np.array([[[1, 2]]])
        labels = simple_labels(inst)
        weights = make_table([[0, 0, 0, 2.0], [0, 0, 1, 1.0]], 1, 1, 1, 2)
        field = uplift_labels(labels, weights)
        assert field.distributions[0] == pytest.approx([0.0, 2 / 3, 1 / 3])

    def test_splat_without_records_is_unobserved(self):
        labels = simple_labels(np.ones((1, 1, 2), dtype=int))
        weights = make_table([[0, 0, 0, 1.0]], 2, 1, 1, 2)
        field = uplift_labels(labels, weights)
        assert not field.observed[1]
        assert (field.distributions[1] == 0.0).all()

    def test_zero_weight_support_is_unobserved(self):
        labels = simple_labels(np.ones((1, 1, 2), dtype=int))
        weights = make_table([[0, 0, 0, 0.0]], 1, 1, 1, 2)
        field = uplift_labels(labels, weights)
        assert not field.observed[0]

    def test_observed_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            h = w = 4
            n = 2
            g = 5
            count = 30
            sid = rng.integers(0, g, count)
            view = rng.integers(0, n, count)
            pix = rng.integers(0, h * w, count)
            keep = np.unique(np.stack([sid, view, pix], 1), axis=0, return_index=True)[1]
            weights = SplatWeightTable(
                g, n, h, w,
                sid[keep], view[keep], pix[keep], rng.random(keep.size),
            )
            labels = simple_labels(rng.integers(0, 3, (n, h, w)))
            field = uplift_labels(labels, weights)
            sums = field.distributions[field.observed].sum(axis=1)
            assert np.abs(sums - 1.0).max() < 1e-6

    def test_dimension_mismatch(self):
        labels = simple_labels(np.ones((1, 2, 2), dtype=int))
        weights = make_table([[0, 0, 0, 1.0]], 1, 1, 3, 3)
        with pytest.raises(ValueError):
            uplift_labels(labels, weights)


class TestRenderLabels:
    def test_uniform_scene_renders_uniformly(self):
        inst = np.full((1, 2, 2), 1)
        labels = simple_labels(inst)
        records = [[p, 0, p, 1.0] for p in range(4)]
        weights = make_table(records, 4, 1, 2, 2)
        field = uplift_labels(labels, weights)
        assert (render_labels(field, weights, 0) == 1).all()

    def test_unobserved_splat_renders_void(self):
        labels = simple_labels(np.ones((1, 1, 2), dtype=int))
        # splat 1 covers pixel 1 but has zero weight -> unobserved -> void
        weights = make_table([[0, 0, 0, 1.0], [1, 0, 1, 0.0]], 2, 1, 1, 2)
        field = uplift_labels(labels, weights)
        rendered = render_labels(field, weights, 0)
        assert rendered[0, 0] == 1
        assert rendered[0, 1] == 0

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(5)
        labels = simple_labels(rng.integers(0, 3, (1, 3, 3)))
        records = [[p % 4, 0, p, float(rng.random() + 0.1)] for p in range(9)]
        weights = make_table(records, 4, 1, 3, 3)
        field = uplift_labels(labels, weights)
        scaled = make_table(
            [[s, v, p, w * 7.5] for s, v, p, w in records], 4, 1, 3, 3
        )
        assert np.array_equal(
            render_labels(field, weights, 0), render_labels(field, scaled, 0)
        )

    def test_label_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        inst = rng.integers(0, 4, (1, 4, 4))
        records = [[p, 0, p, 1.0] for p in range(16)]
        weights = make_table(records, 16, 1, 4, 4)
        perm = {0: 0, 1: 3, 2: 1, 3: 2}
        base = render_labels(uplift_labels(simple_labels(inst), weights), weights, 0)
        permuted = render_labels(
            uplift_labels(simple_labels(np.vectorize(perm.get)(inst)), weights),
            weights,
            0,
        )
        assert np.array_equal(np.vectorize(perm.get)(base), permuted)

    def test_unknown_view(self):
        labels = simple_labels(np.ones((1, 1, 2), dtype=int))
        weights = make_table([[0, 0, 0, 1.0]], 1, 1, 1, 2)
        field = uplift_labels(labels, weights)
        with pytest.raises(ValueError):
            render_labels(field, weights, 5)

    def test_round_trip_on_clean_scene(self):
        gt, proposals, splats = generate_scene(SceneSpec(seed=4))
        merged = merge_qubo(proposals)
        field = uplift_labels(merged, splats)
        rendered = np.stack(
            [render_labels(field, splats, v) for v in range(splats.num_views)]
        )
        round_trip = PanopticMap.from_instances(
            rendered, merged.instance_to_class, merged.class_table
        )
        assert scene_pq(round_trip, merged, merged.class_table).pq == 100.0


class TestSplatWeightTable:
    def test_duplicate_triples_rejected(self):
        with pytest.raises(ValueError):
            make_table([[0, 0, 0, 1.0], [0, 0, 0, 2.0]], 1, 1, 1, 2)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            make_table([[0, 0, 0, -1.0]], 1, 1, 1, 2)

    def test_out_of_range_pixel_rejected(self):
        with pytest.raises(ValueError):
            make_table([[0, 0, 9, 1.0]], 1, 1, 1, 2)
