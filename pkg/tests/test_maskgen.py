import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from cinemaloop import (
    AttentionStack,
    attention_pca,
    average_attention,
    iou,
    kmeans_cluster,
    labels_to_masks,
    pca_visualize,
    row_cosine_affinity,
    select_clusters,
    single_step_affinity,
    spectral_cluster,
)
from cinemaloop.maskgen import DEFAULT_OVERLAP, FINE_STRUCTURE_OVERLAP


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def planted_affinity(sizes, noise=0.01, seed=0):
    """Block-diagonal affinity with symmetric off-block noise."""
    n = sum(sizes)
    g = rng(seed)
    a = g.uniform(0.0, noise, size=(n, n))
    a = (a + a.T) / 2.0
    start = 0
    truth = np.empty(n, dtype=int)
    for label, size in enumerate(sizes):
        a[start : start + size, start : start + size] = 1.0
        truth[start : start + size] = label
        start += size
    return a, truth


def make_stack(maps, ids, grid):
    return AttentionStack(timestep_ids=ids, maps=np.asarray(maps, np.float32),
                          grid_h=grid[0], grid_w=grid[1])


def random_affinity(side, seed=0):
    a = rng(seed).random((side, side))
    return (a + a.T) / 2.0


class TestAverageAttention:
    def test_mean_of_identical_maps(self):
        a = random_affinity(4, seed=1).astype(np.float32)
        stack = make_stack([a, a, a], [30, 35, 40], (2, 2))
        np.testing.assert_allclose(average_attention(stack), (a + a.T) / 2, atol=1e-7)

    def test_from_step_filters_early_maps(self):
        early = np.zeros((4, 4), np.float32)
        late = np.ones((4, 4), np.float32)
        stack = make_stack([early, late], [20, 30], (2, 2))
        np.testing.assert_array_equal(average_attention(stack, from_step=25), late)

    def test_matches_entrywise_mean_oracle(self):
        maps = [rng(s).random((9, 9)).astype(np.float32) for s in (2, 3, 4)]
        stack = make_stack(maps, [30, 40, 50], (3, 3))
        got = average_attention(stack, from_step=25)
        acc = np.zeros((9, 9))
        for m in maps:
            acc += m
        want = acc / 3.0
        np.testing.assert_allclose(got, (want + want.T) / 2, atol=1e-6)

    def test_no_retained_steps_raises(self):
        stack = make_stack([np.ones((4, 4), np.float32)], [10], (2, 2))
        with pytest.raises(ValueError):
            average_attention(stack, from_step=25)

    def test_timestep_order_equivariance(self):
        m1, m2 = [rng(s).random((4, 4)).astype(np.float32) for s in (5, 6)]
        fwd = make_stack([m1, m2], [30, 40], (2, 2))
        rev = make_stack([m2, m1], [40, 30], (2, 2))
        np.testing.assert_array_equal(average_attention(fwd), average_attention(rev))

    def test_duplicate_maps_do_not_shift_mean(self):
        m = random_affinity(4, seed=7).astype(np.float32)
        once = make_stack([m], [30], (2, 2))
        thrice = make_stack([m, m, m], [30, 31, 32], (2, 2))
        np.testing.assert_allclose(
            average_attention(once), average_attention(thrice), atol=1e-7
        )


class TestSpectralCluster:
    def test_recovers_block_diagonal_components(self):
        a, truth = planted_affinity([6, 10], noise=0.0)
        labels = spectral_cluster(a, k=2, seed=0)
        assert adjusted_rand_score(truth, labels) == 1.0

    def test_default_cluster_count_is_ten(self):
        import inspect

        assert inspect.signature(spectral_cluster).parameters["k"].default == 10

    def test_planted_three_partition(self):
        a, truth = planted_affinity([40, 30, 26], noise=0.01, seed=3)
        labels = spectral_cluster(a, k=3, seed=3)
        assert adjusted_rand_score(truth, labels) == 1.0

    def test_permutation_invariance(self):
        a, truth = planted_affinity([12, 9, 11], noise=0.01, seed=4)
        perm = rng(5).permutation(a.shape[0])
        direct = spectral_cluster(a, k=3, seed=1)
        permuted = spectral_cluster(a[perm][:, perm], k=3, seed=1)
        assert adjusted_rand_score(direct[perm], permuted) == 1.0

    def test_rejects_nonsymmetric(self):
        a = rng(6).random((8, 8))
        with pytest.raises(ValueError):
            spectral_cluster(a, k=2)

    def test_rejects_too_many_clusters(self):
        a = random_affinity(4)
        with pytest.raises(ValueError):
            spectral_cluster(a, k=5)


class TestKmeansCluster:
    def test_separates_far_row_clusters(self):
        a = np.zeros((10, 10))
        a[:4, :4] = 100.0
        a[4:, 4:] = 1.0
        labels = kmeans_cluster(a, k=2, seed=0)
        assert len(set(labels[:4])) == 1
        assert len(set(labels[4:])) == 1
        assert labels[0] != labels[5]

    def test_single_cluster(self):
        labels = kmeans_cluster(random_affinity(7), k=1, seed=0)
        assert (labels == 0).all()

    def test_converged_labels_are_a_fixed_point(self):
        a = random_affinity(20, seed=8)
        k = 4
        labels = kmeans_cluster(a, k=k, seed=2)
        centers = np.stack([a[labels == j].mean(axis=0) for j in range(k)])
        d2 = ((a[:, None, :] - centers[None]) ** 2).sum(axis=2)
        assert np.array_equal(d2.argmin(axis=1), labels)


class TestSingleStepAffinity:
    def test_single_map_stack_equals_average(self):
        m = rng(9).random((4, 4)).astype(np.float32)
        stack = make_stack([m], [30], (2, 2))
        np.testing.assert_array_equal(
            single_step_affinity(stack, 30), average_attention(stack)
        )

    def test_selects_requested_step(self):
        m30 = np.full((4, 4), 0.25, np.float32)
        m40 = np.full((4, 4), 0.75, np.float32)
        stack = make_stack([m30, m40], [30, 40], (2, 2))
        np.testing.assert_array_equal(single_step_affinity(stack, 40), m40)

    def test_missing_step_raises(self):
        stack = make_stack([np.ones((4, 4), np.float32)], [30], (2, 2))
        with pytest.raises(ValueError):
            single_step_affinity(stack, 31)

    def test_differs_from_average_when_maps_differ(self):
        m1 = rng(10).random((4, 4)).astype(np.float32)
        m2 = m1 + 0.5
        stack = make_stack([m1, m2.astype(np.float32)], [30, 40], (2, 2))
        assert not np.allclose(
            single_step_affinity(stack, 30), average_attention(stack)
        )


class TestLabelsToMasks:
    def test_single_label(self):
        masks = labels_to_masks(np.zeros(4, int), 2, 2, 6, 6)
        assert len(masks) == 1
        assert masks[0].all()

    def test_checkerboard_upsamples_to_blocks(self):
        labels = np.array([0, 1, 1, 0])
        masks = labels_to_masks(labels, 2, 2, 4, 4)
        zero = masks[0]
        assert zero[:2, :2].all() and zero[2:, 2:].all()
        assert not zero[:2, 2:].any() and not zero[2:, :2].any()

    def test_masks_partition_canvas(self):
        labels = rng(11).integers(0, 5, size=12)
        masks = labels_to_masks(labels, 3, 4, 9, 16)
        stacked = np.stack(masks)
        np.testing.assert_array_equal(stacked.sum(axis=0), 1)

    def test_size_mismatch_raises(self):
        with pytest.raises(ValueError):
            labels_to_masks(np.zeros(5, int), 2, 2, 4, 4)


class TestSelectClusters:
    def make_case(self):
        guide = np.zeros((10, 10), bool)
        guide[:, :5] = True
        inside = np.zeros_like(guide)
        inside[0, :3] = True  # ratio 1.0
        partial = np.zeros_like(guide)
        partial[1, 3:8] = True  # ratio 2/5
        outside = np.zeros_like(guide)
        outside[2, 6:9] = True  # ratio 0.0
        return guide, inside, partial, outside

    def test_extremes(self):
        guide, inside, _, outside = self.make_case()
        out = select_clusters([inside, outside], guide, 0.7)
        assert np.array_equal(out, inside)

    def test_threshold_arithmetic(self):
        guide = np.zeros((5, 5), bool)
        guide[:3] = True
        cluster = np.zeros_like(guide)
        cluster[2:4, :5] = True  # 6 of 10 pixels inside
        assert not select_clusters([cluster], guide, 0.7).any()
        assert select_clusters([cluster], guide, 0.5).any()

    def test_monotone_in_threshold(self):
        guide, inside, partial, outside = self.make_case()
        masks = [inside, partial, outside]
        low = select_clusters(masks, guide, 0.3)
        high = select_clusters(masks, guide, 0.9)
        assert (high <= low).all()

    def test_preset_thresholds(self):
        assert DEFAULT_OVERLAP == 0.70
        assert FINE_STRUCTURE_OVERLAP == 0.90

    def test_empty_cluster_never_selected(self):
        guide = np.ones((4, 4), bool)
        out = select_clusters([np.zeros((4, 4), bool)], guide, 0.5)
        assert not out.any()

    def test_bad_threshold_raises(self):
        guide = np.ones((2, 2), bool)
        with pytest.raises(ValueError):
            select_clusters([guide], guide, 0.0)


class TestIou:
    def test_identical_nonempty(self):
        m = rng(12).random((6, 6)) > 0.5
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), bool)
        b = np.zeros((4, 4), bool)
        a[0, 0] = True
        b[3, 3] = True
        assert iou(a, b) == 0.0

    def test_forced_arithmetic(self):
        a = np.zeros((4, 4), bool)
        b = np.zeros((4, 4), bool)
        a[0, :2] = True
        b[0, 1:3] = True
        assert iou(a, b) == pytest.approx(1 / 3)

    def test_both_empty_defined_as_zero(self):
        empty = np.zeros((3, 3), bool)
        assert iou(empty, empty) == 0.0

    def test_symmetric_and_bounded(self):
        a = rng(13).random((8, 8)) > 0.6
        b = rng(14).random((8, 8)) > 0.4
        assert iou(a, b) == iou(b, a)
        assert 0.0 <= iou(a, b) <= 1.0


class TestPcaVisualize:
    def test_rank_one_affinity_concentrates_variance(self):
        v = rng(15).random(16)
        a = np.outer(v, v)
        img = pca_visualize(a, 4, 4)
        # first component spans [0, 1]; the rest carry no variance
        assert img[:, :, 0].min() == 0.0 and img[:, :, 0].max() == 1.0
        assert (img[:, :, 1] == 0.5).all() and (img[:, :, 2] == 0.5).all()

    def test_output_in_unit_range(self):
        img = pca_visualize(random_affinity(16, seed=16), 4, 4)
        assert img.min() >= 0.0 and img.max() <= 1.0
        assert img.shape == (4, 4, 3)

    def test_degenerate_rows_render_mid_gray(self):
        a = np.ones((9, 9))
        img = pca_visualize(a, 3, 3)
        assert (img == 0.5).all()

    def test_components_match_covariance_eigenvectors(self):
        a = random_affinity(25, seed=17)
        _, components = attention_pca(a, 3)
        centered = a - a.mean(axis=0)
        cov = centered.T @ centered
        evals, evecs = np.linalg.eigh(cov)
        top = evecs[:, ::-1][:, :3].T
        for got, want in zip(components, top):
            sign = np.sign(got @ want) or 1.0
            np.testing.assert_allclose(got, sign * want, atol=1e-5)

    def test_token_count_mismatch_raises(self):
        with pytest.raises(ValueError):
            pca_visualize(random_affinity(9), 4, 4)


class TestRowCosineAffinity:
    def test_identical_rows_have_unit_similarity(self):
        a = np.tile(rng(18).random(6), (6, 1))
        cos = row_cosine_affinity(a)
        np.testing.assert_allclose(cos, 1.0, atol=1e-12)

    def test_symmetric_output(self):
        cos = row_cosine_affinity(rng(19).random((8, 8)))
        np.testing.assert_allclose(cos, cos.T, atol=1e-12)


class TestAttentionStackValidation:
    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            make_stack([np.full((4, 4), -1.0, np.float32)], [30], (2, 2))

    def test_rejects_wrong_side(self):
        with pytest.raises(ValueError):
            make_stack([np.ones((5, 5), np.float32)], [30], (2, 2))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            AttentionStack(timestep_ids=[], maps=np.zeros((0, 4, 4), np.float32),
                           grid_h=2, grid_w=2)
