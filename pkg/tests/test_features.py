import numpy as np
import pytest

from fallcolor import features
from fallcolor.core import ColoredPointCloud, FeatureSchema
from fallcolor.errors import InsufficientPointsError, ValidationError
from fallcolor.colorspace import rgb_to_lab


def cloud_from_xyz(xyz, rgb=None):
    xyz = np.asarray(xyz, dtype=np.float32)
    if rgb is None:
        rgb = np.full((len(xyz), 3), 90, dtype=np.uint8)
    return ColoredPointCloud(xyz, np.asarray(rgb, dtype=np.uint8))


class TestNeighborhoodEigen:
    def test_planar_points_have_degenerate_third_axis(self):
        rng = np.random.default_rng(0)
        pts = np.zeros((60, 3))
        pts[:, 0] = rng.uniform(-1, 1, 60)
        pts[:, 1] = rng.uniform(-1, 1, 60)  # z = 0 plane
        cloud = cloud_from_xyz(pts)
        evals, evecs = features.neighborhood_eigen(cloud, 0, k=20)
        assert evals[2] == pytest.approx(0.0, abs=1e-9)
        normal = evecs[2]
        assert abs(normal[2]) == pytest.approx(1.0, abs=1e-6)

    def test_collinear_points_have_two_zero_eigenvalues(self):
        t = np.linspace(0, 1, 40)
        pts = np.stack([t, 2 * t, -t], axis=1)
        cloud = cloud_from_xyz(pts)
        evals, _ = features.neighborhood_eigen(cloud, 5, k=10)
        assert evals[1] == pytest.approx(0.0, abs=1e-9)
        assert evals[2] == pytest.approx(0.0, abs=1e-9)

    def test_matches_dense_eigensolver_oracle(self):
        rng = np.random.default_rng(42)
        pts = rng.normal(size=(200, 3))
        cloud = cloud_from_xyz(pts)
        k = 25
        point = 17
        evals, evecs = features.neighborhood_eigen(cloud, point, k=k)

        # oracle: brute-force distance sort + dense covariance eigensolve
        xyz = cloud.xyz.astype(np.float64)
        d = np.linalg.norm(xyz - xyz[point], axis=1)
        order = np.lexsort((np.arange(len(d)), d))
        neighbors = [i for i in order if i != point][:k]
        nb = xyz[neighbors]
        cov = np.cov(nb.T, bias=True)
        want = np.sort(np.linalg.eigvalsh(cov))[::-1]
        assert np.allclose(evals, want, atol=1e-12)
        for v, lam in zip(evecs, evals):
            assert np.linalg.norm(cov @ v - lam * v) < 1e-9

    def test_eigenvalues_rotation_invariant(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(80, 3)) * np.array([3.0, 1.0, 0.2])
        theta = 0.83
        rot = np.array([[np.cos(theta), -np.sin(theta), 0],
                        [np.sin(theta), np.cos(theta), 0],
                        [0, 0, 1.0]])
        evals_a, _ = features.neighborhood_eigen(cloud_from_xyz(pts), 4, k=30)
        evals_b, _ = features.neighborhood_eigen(cloud_from_xyz(pts @ rot.T), 4, k=30)
        assert np.allclose(evals_a, evals_b, atol=1e-6)

    def test_too_small_cloud_rejected(self):
        cloud = cloud_from_xyz(np.random.default_rng(1).normal(size=(10, 3)))
        with pytest.raises(InsufficientPointsError):
            features.neighborhood_eigen(cloud, 0, k=10)

    def test_tie_break_by_point_index(self):
        # four equidistant neighbors but k=3: the lowest-index trio wins
        pts = np.array([
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0],
            [5.0, 5.0, 5.0],
        ])
        cloud = cloud_from_xyz(pts)
        evals, _ = features.neighborhood_eigen(cloud, 0, k=3)
        nb = pts[[1, 2, 3]]
        centered = nb - nb.mean(axis=0)
        want = np.sort(np.linalg.eigvalsh(centered.T @ centered / 3))[::-1]
        assert np.allclose(evals, want, atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        cloud = cloud_from_xyz(rng.normal(size=(120, 3)))
        evals_all, evecs_all = features.neighborhood_eigen_all(cloud, k=15)
        for i in (0, 7, 63, 119):
            evals, evecs = features.neighborhood_eigen(cloud, i, k=15)
            assert np.allclose(evals_all[i], evals, atol=1e-12)
            assert np.allclose(evecs_all[i], evecs, atol=1e-12)


class TestFeaturize:
    def test_color_only_on_uniform_cloud(self):
        rgb = np.tile(np.array([[60, 140, 50]], dtype=np.uint8), (20, 1))
        cloud = cloud_from_xyz(np.random.default_rng(0).normal(size=(20, 3)), rgb)
        X = features.featurize(cloud, FeatureSchema(channels=("a_star", "b_star")))
        assert X.shape == (20, 2)
        assert np.all(X == X[0])
        assert X[0, 0] < 0  # green has negative a*

    def test_full_schema_arity(self):
        from fallcolor.core import COLOR_FEATURES, EIGEN_FEATURES
        cloud = cloud_from_xyz(np.random.default_rng(1).normal(size=(40, 3)))
        schema = FeatureSchema(channels=COLOR_FEATURES + EIGEN_FEATURES, neighbor_k=10)
        X = features.featurize(cloud, schema)
        assert X.shape == (40, 17)

    def test_values_match_manual_computation(self):
        xyz = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 2]], dtype=np.float32)
        rgb = np.array([[10, 20, 30], [200, 100, 50], [0, 255, 0], [80, 80, 80]],
                       dtype=np.uint8)
        cloud = ColoredPointCloud(xyz, rgb)
        X = features.featurize(cloud, FeatureSchema())
        lab = rgb_to_lab(rgb)
        for i in range(4):
            assert X[i, 0] == lab[i, 1]
            assert X[i, 1] == lab[i, 2]
            assert np.all(X[i, 2:] == rgb[i])

    def test_eigen_schema_needs_enough_points(self):
        cloud = cloud_from_xyz(np.random.default_rng(2).normal(size=(5, 3)))
        schema = FeatureSchema(channels=("eig1",), neighbor_k=10)
        with pytest.raises(InsufficientPointsError):
            features.featurize(cloud, schema)

    def test_feature_order_deterministic(self):
        rng = np.random.default_rng(6)
        cloud = cloud_from_xyz(rng.normal(size=(50, 3)),
                               rng.integers(0, 256, (50, 3)))
        schema = FeatureSchema(channels=("b_star", "r", "eig1"), neighbor_k=8)
        a = features.featurize(cloud, schema)
        b = features.featurize(cloud, schema)
        assert np.array_equal(a, b)

    def test_unknown_channel_rejected(self):
        with pytest.raises(ValidationError):
            FeatureSchema(channels=("a_star", "hue"))
