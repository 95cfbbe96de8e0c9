import numpy as np
import pytest

from fallcolor import cluster
from fallcolor.core import GREEN, TRUNK, UNASSIGNED, YELLOW
from fallcolor.errors import DegenerateInputError, EmptyCloudError, ValidationError
from fallcolor.synth import SynthTreeSpec, gen_tree


def two_blobs(n_per=300, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal((-20.0, 12.0), 0.8, (n_per, 2))
    b = rng.normal((5.0, 60.0), 0.8, (n_per, 2))
    return np.concatenate([a, b]), a.mean(axis=0), b.mean(axis=0)


class TestKmeansAb:
    def test_two_blobs_recover_means(self):
        points, mean_a, mean_b = two_blobs(seed=1)
        centers, assign = cluster.kmeans_ab(points, 2, seed=3)
        got = centers[np.argsort(centers[:, 0])]
        want = np.stack([mean_a, mean_b])[np.argsort([mean_a[0], mean_b[0]])]
        assert np.allclose(got, want, atol=1e-3)
        assert len(np.unique(assign)) == 2

    def test_identical_points_single_cluster(self):
        points = np.tile([[3.0, -4.0]], (50, 1))
        centers, assign = cluster.kmeans_ab(points, 1, seed=0)
        assert np.allclose(centers[0], [3.0, -4.0])
        assert np.all(assign == 0)

    def test_default_twenty_clusters_on_synthetic_tree(self):
        from fallcolor.colorspace import cloud_ab
        cloud, _ = gen_tree(SynthTreeSpec(yellow_fraction=0.5, seed=2))
        centers, assign = cluster.kmeans_ab(cloud_ab(cloud), 20, seed=2)
        assert centers.shape == (20, 2)
        assert assign.shape == (cloud.n_points,)
        assert assign.max() < 20

    def test_fewer_points_than_clusters_rejected(self):
        with pytest.raises(DegenerateInputError):
            cluster.kmeans_ab(np.zeros((3, 2)), 5, seed=0)

    def test_objective_nonincreasing(self):
        points, _, _ = two_blobs(n_per=150, seed=4)

        def sse(centers, assign):
            return float(((points - centers[assign]) ** 2).sum())

        rng = np.random.default_rng(7)
        centers = cluster._kmeans_pp_centers(points, 6, rng)
        assign = cluster._kernels.assign_nearest(points, centers)
        previous = sse(centers, assign)
        for _ in range(25):
            counts = np.bincount(assign, minlength=6).astype(float)
            for d in range(2):
                sums = np.bincount(assign, weights=points[:, d], minlength=6)
                centers[:, d] = np.where(counts > 0, sums / np.maximum(counts, 1),
                                         centers[:, d])
            assign = cluster._kernels.assign_nearest(points, centers)
            current = sse(centers, assign)
            assert current <= previous + 1e-9
            previous = current

    def test_deterministic_under_seed(self):
        points, _, _ = two_blobs(seed=5)
        c1, a1 = cluster.kmeans_ab(points, 4, seed=11)
        c2, a2 = cluster.kmeans_ab(points, 4, seed=11)
        assert np.array_equal(c1, c2)
        assert np.array_equal(a1, a2)


class TestMergeClusters:
    def test_published_window_examples(self):
        w = cluster.WINDOWS_2023
        assert w.label_of(-20.0, 10.0) == GREEN
        assert w.label_of(5.0, 30.0) == TRUNK
        assert w.label_of(-5.0, 30.0) == UNASSIGNED
        assert w.label_of(0.0, 60.0) == YELLOW

    def test_labels_follow_cluster_membership(self):
        centers = np.array([[-20.0, 10.0], [5.0, 30.0], [-5.0, 30.0]])
        assignments = np.array([0, 1, 2, 1, 0])
        labels = cluster.merge_clusters(centers, assignments, cluster.WINDOWS_2023)
        assert list(labels) == [GREEN, TRUNK, UNASSIGNED, TRUNK, GREEN]

    def test_permutation_of_cluster_indices_preserves_labels(self):
        rng = np.random.default_rng(9)
        centers = rng.uniform(-30, 70, (8, 2))
        assignments = rng.integers(0, 8, 200)
        base = cluster.merge_clusters(centers, assignments, cluster.WINDOWS_2023)
        perm = rng.permutation(8)
        inverse = np.argsort(perm)
        permuted = cluster.merge_clusters(centers[perm], inverse[assignments],
                                          cluster.WINDOWS_2023)
        assert np.array_equal(base, permuted)

    def test_empty_centers_rejected(self):
        with pytest.raises(ValidationError):
            cluster.merge_clusters(np.empty((0, 2)), np.array([], dtype=int),
                                   cluster.WINDOWS_2023)

    def test_yellow_takes_precedence_over_trunk_overlap(self):
        # a* >= 0 with 45 <= b* <= 50 lies in both published windows
        assert cluster.WINDOWS_2023.label_of(5.0, 47.0) == YELLOW

    def test_window_bounds_validated(self):
        with pytest.raises(ValidationError):
            cluster.Window(a_min=1.0, a_max=-1.0)


class TestClassifyKmeans:
    def test_seventy_percent_yellow_recovered(self):
        spec = SynthTreeSpec(point_count=5000, yellow_fraction=0.7, seed=6)
        cloud, _ = gen_tree(spec)
        cc = cluster.classify_kmeans(cloud, n=20, seed=1)
        yellow_frac = cc.count(YELLOW) / (cc.count(YELLOW) + cc.count(GREEN))
        assert yellow_frac == pytest.approx(0.7, abs=0.02)

    def test_pure_green_cloud(self):
        spec = SynthTreeSpec(point_count=2000, yellow_fraction=0.0,
                             trunk_fraction=0.0, seed=7)
        cloud, _ = gen_tree(spec)
        cc = cluster.classify_kmeans(cloud, n=20, seed=2)
        assert cc.count(GREEN) / cloud.n_points >= 0.99

    def test_fixed_seed_identical_labels(self):
        cloud, _ = gen_tree(SynthTreeSpec(yellow_fraction=0.4, seed=8))
        a = cluster.classify_kmeans(cloud, seed=5)
        b = cluster.classify_kmeans(cloud, seed=5)
        assert np.array_equal(a.labels, b.labels)

    def test_empty_cloud_is_error(self):
        from fallcolor.core import ColoredPointCloud
        empty = ColoredPointCloud(np.empty((0, 3), np.float32),
                                  np.empty((0, 3), np.uint8))
        with pytest.raises(EmptyCloudError):
            cluster.classify_kmeans(empty)
