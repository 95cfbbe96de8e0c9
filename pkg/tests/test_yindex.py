import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fallcolor import yindex
from fallcolor.core import (GREEN, TRUNK, UNASSIGNED, YELLOW, ClassifiedCloud,
                            ColoredPointCloud, TreeObservation)
from fallcolor.errors import (InsufficientDataError, NoFoliageError,
                              ValidationError)


def classified(y=0, g=0, t=0, u=0):
    n = y + g + t + u
    cloud = ColoredPointCloud(np.zeros((n, 3), np.float32),
                              np.zeros((n, 3), np.uint8))
    labels = np.concatenate([
        np.full(y, YELLOW), np.full(g, GREEN), np.full(t, TRUNK),
        np.full(u, UNASSIGNED)]).astype(np.uint8)
    return ClassifiedCloud(cloud, labels)


class TestYellowness:
    def test_fully_green_is_minus_one(self):
        yi = yindex.yellowness(classified(y=0, g=500))
        assert yi.value == -1.0
        assert (yi.yellow_count, yi.green_count) == (0, 500)

    def test_balanced_is_zero(self):
        assert yindex.yellowness(classified(y=100, g=100)).value == 0.0

    def test_three_to_one_is_half(self):
        assert yindex.yellowness(classified(y=300, g=100)).value == 0.5

    def test_trunk_and_unassigned_excluded(self):
        yi = yindex.yellowness(classified(y=30, g=10, t=500, u=200))
        assert yi.value == 0.5

    def test_no_foliage_is_error(self):
        with pytest.raises(NoFoliageError):
            yindex.yellowness(classified(t=100, u=50))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 5000), st.integers(0, 5000))
    def test_antisymmetry(self, y, g):
        if y + g == 0:
            return
        a = yindex.yellowness(classified(y=y, g=g)).value
        b = yindex.yellowness(classified(y=g, g=y)).value
        assert a == pytest.approx(-b, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 300), st.integers(1, 300), st.integers(2, 7))
    def test_scale_invariance(self, y, g, k):
        a = yindex.yellowness(classified(y=y, g=g)).value
        b = yindex.yellowness(classified(y=k * y, g=k * g)).value
        assert a == pytest.approx(b, abs=1e-12)

    def test_strictly_increasing_in_yellow(self):
        values = [yindex.yellowness(classified(y=y, g=50)).value
                  for y in range(0, 200, 10)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestGroundTruthIndex:
    def test_all_green_mass(self):
        assert yindex.ground_truth_index(0.0, 120.0) == -1.0

    def test_equal_masses(self):
        assert yindex.ground_truth_index(50.0, 50.0) == 0.0

    def test_three_to_one(self):
        assert yindex.ground_truth_index(75.0, 25.0) == 0.5

    def test_both_zero_is_error(self):
        with pytest.raises(NoFoliageError):
            yindex.ground_truth_index(0.0, 0.0)

    def test_negative_mass_rejected(self):
        with pytest.raises(ValidationError):
            yindex.ground_truth_index(-1.0, 10.0)


class TestCropBand:
    def make_column(self):
        h = np.linspace(0.0, 2.0, 101)
        xyz = np.stack([h, np.zeros(101), np.ones(101)], axis=1)
        return ColoredPointCloud(xyz.astype(np.float32),
                                 np.zeros((101, 3), np.uint8)), h

    def test_unbounded_band_is_identity(self):
        cloud, _ = self.make_column()
        out = yindex.crop_band(cloud, 0.0, np.inf)
        assert out.same_points(cloud)

    def test_middle_band(self):
        cloud, h = self.make_column()
        out = yindex.crop_band(cloud, 0.8, 1.6)
        want = (h >= 0.8) & (h < 1.6)
        assert out.n_points == int(want.sum())
        assert np.allclose(np.sort(out.xyz[:, 0]), np.sort(h[want]), atol=1e-7)

    def test_band_matches_generator_wires(self):
        from fallcolor.synth import SynthTreeSpec, gen_tree
        spec = SynthTreeSpec(point_count=3000, yellow_fraction=0.5, seed=3)
        cloud, _ = gen_tree(spec)
        low, high = spec.wire_heights_m[1], spec.wire_heights_m[3]
        out = yindex.crop_band(cloud, low, high)
        h = cloud.xyz[:, 0]
        assert out.n_points == int(((h >= low) & (h < high)).sum())

    def test_invalid_band_rejected(self):
        cloud, _ = self.make_column()
        with pytest.raises(ValidationError):
            yindex.crop_band(cloud, 1.5, 1.5)


def obs(tree_id, est, truth):
    return TreeObservation(tree_id=tree_id, week=1, yellow_count=1, green_count=1,
                           index=est, ground_truth=truth)


class TestValidate:
    def test_perfect_agreement(self):
        observations = [obs(f"T{i}", v, v) for i, v in enumerate((-0.5, 0.0, 0.4, 0.9))]
        summary = yindex.validate(observations)
        assert summary.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_constant_estimate_is_degenerate(self):
        observations = [obs(f"T{i}", 0.25, v) for i, v in enumerate((-0.5, 0.1, 0.7))]
        assert yindex.validate(observations).r_squared <= 0.0

    def test_matches_closed_form_for_known_noise(self):
        # est = truth + e, e ~ N(0, sigma^2): population R^2 (squared Pearson)
        # is var(truth) / (var(truth) + sigma^2)
        rng = np.random.default_rng(12)
        truth = rng.uniform(-1, 1, 4000)
        sigma = 0.3
        est = truth + rng.normal(0, sigma, truth.size)
        observations = [obs(f"T{i}", float(e), float(t))
                        for i, (e, t) in enumerate(zip(est, truth))]
        want = np.var(truth) / (np.var(truth) + sigma ** 2)
        assert yindex.validate(observations).r_squared == pytest.approx(want, abs=0.05)

    def test_too_few_pairs_rejected(self):
        observations = [obs("T1", 0.1, 0.2), obs("T2", 0.3, 0.4)]
        with pytest.raises(InsufficientDataError):
            yindex.validate(observations)

    def test_unpaired_observations_ignored(self):
        observations = [obs(f"T{i}", v, v) for i, v in enumerate((-0.4, 0.2, 0.8))]
        observations.append(TreeObservation("T9", 1, 5, 5, 0.0))
        summary = yindex.validate(observations)
        assert summary.n_pairs == 3


class TestFirstZeroCrossing:
    def test_simple_crossing_interpolated(self):
        weeks = [1, 2, 3, 4]
        values = [-0.6, -0.2, 0.2, 0.8]
        assert yindex.first_zero_crossing(weeks, values) == pytest.approx(2.5)

    def test_never_crossing(self):
        assert yindex.first_zero_crossing([1, 2, 3], [-0.9, -0.8, -0.5]) is None

    def test_starts_nonnegative(self):
        assert yindex.first_zero_crossing([1, 2], [0.1, 0.9]) == 1.0
