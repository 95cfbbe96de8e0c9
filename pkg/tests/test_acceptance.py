"""Acceptance suite: one test per acceptance criterion, each printing a
PASS line (run with -s to see them). Tolerances are fixed here and nowhere
else; every expected value is exact algebra, a generator ground truth, or
an independent oracle.
"""
import json
import statistics
import time

import numpy as np
import pytest

from fallcolor import cluster, colorspace, fieldstats, gboost, synth, treeseg, yindex
from fallcolor.cli import main as cli_main
from fallcolor.core import FeatureSchema
from fallcolor.yindex import first_zero_crossing
from oracles import brute_anova, brute_pearson, brute_tukey, reference_srgb_to_lab
from test_gboost import noisy_overlap_dataset, separable_dataset


def report(name):
    print(f"\nACCEPTANCE {name}: PASS")


@pytest.fixture(scope="module")
def trained_model():
    ds = synth.gen_label_dataset(
        synth.SynthTreeSpec(point_count=6000, yellow_fraction=0.4,
                            trunk_fraction=0.2, seed=101),
        per_class=150)
    model, _, _ = gboost.train(ds, FeatureSchema(), gboost.GbmHyperparams(seed=7))
    return model


def test_end_to_end_synthetic_recovery(trained_model):
    """Both classifiers recover the yellowness index within +-0.05 of 2f-1
    for 25 trees (5 fractions x 5 seeds, sigma=3), in under 60 seconds."""
    t0 = time.perf_counter()
    for f in (0.0, 0.25, 0.5, 0.75, 1.0):
        want = 2.0 * f - 1.0
        for seed in range(5):
            spec = synth.SynthTreeSpec(point_count=4000, yellow_fraction=f,
                                       color_noise=3.0, seed=1000 + seed)
            cloud, _ = synth.gen_tree(spec)
            for method, classify in (
                ("kmeans", lambda c: cluster.classify_kmeans(c, n=20, seed=seed)),
                ("gbm", lambda c: gboost.classify_gbm(c, trained_model)),
            ):
                got = yindex.yellowness(classify(cloud)).value
                assert abs(got - want) <= 0.05, \
                    f"{method} f={f} seed={seed}: {got} vs {want}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"25-tree run took {elapsed:.1f}s"
    report(f"end-to-end synthetic recovery ({elapsed:.1f}s for 25 trees x 2 methods)")


def test_segmentation_oracle():
    """Paper constants (blue 153, 3 m, 0.5 m band, stride 10): >=99% tree
    recall, <=1% contamination by the filter chain; stride keeps exactly
    indices 0, 10, 20, ..."""
    for seed in (1, 2, 3):
        scene_spec = synth.SynthSceneSpec(
            tree=synth.SynthTreeSpec(point_count=5000, yellow_fraction=0.3,
                                     seed=seed),
            seed=seed)
        scene, provenance = synth.gen_scene(scene_spec)

        filters_only = treeseg.SegmentationParams(downsample_stride=1)
        seg = treeseg.segment_tree(scene, filters_only)
        kept = {tuple(p) for p in seg.xyz.tolist()}
        is_kept = np.array([tuple(p) in kept for p in scene.xyz.tolist()])
        tree_mask = provenance == synth.PROV_TREE
        recall = is_kept[tree_mask].mean()
        contamination = (is_kept & ~tree_mask).sum() / is_kept.sum()
        assert recall >= 0.99, f"recall {recall}"
        assert contamination <= 0.01, f"contamination {contamination}"

        defaults = treeseg.SegmentationParams()  # 153 / 3 m / 0.5 m / stride 10
        assert (defaults.sky_blue_threshold, defaults.max_depth_m,
                defaults.ground_band_m, defaults.downsample_stride) == (153, 3.0, 0.5, 10)
        strided = treeseg.segment_tree(scene, defaults)
        assert np.array_equal(strided.xyz, seg.xyz[::10])
        assert np.array_equal(strided.rgb, seg.rgb[::10])
    report("segmentation oracle (recall >= 99%, contamination <= 1%, exact stride)")


def test_color_math():
    """Neutral exactness below 1e-3, reference-oracle agreement within 1e-3
    on 1000 random colors, hue invariance under scaling within 1e-6."""
    for v in (0, 64, 128, 200, 255):
        lab = colorspace.srgb_to_lab(v, v, v)
        assert abs(lab.a_star) < 1e-3 and abs(lab.b_star) < 1e-3
    white = colorspace.srgb_to_lab(255, 255, 255)
    assert abs(white.L - 100.0) < 1e-3
    black = colorspace.srgb_to_lab(0, 0, 0)
    assert abs(black.L) < 1e-3

    rng = np.random.default_rng(424242)
    rgb = rng.integers(0, 256, (1000, 3))
    got = colorspace.rgb_to_lab(rgb)
    for i in range(1000):
        want = reference_srgb_to_lab(*map(float, rgb[i]))
        assert np.all(np.abs(got[i] - np.array(want)) < 1e-3)

    for _ in range(300):
        r, g, b = rng.integers(0, 256, 3)
        if r == g == b:
            continue
        k = float(rng.uniform(0.05, 1.0))
        h0 = colorspace.srgb_to_hsv(float(r), float(g), float(b)).h
        h1 = colorspace.srgb_to_hsv(k * r, k * g, k * b).h
        assert abs(h0 - h1) < 1e-6
    report("color math (neutrals, 1000-color oracle, hue invariance)")


def test_gbm_training_criteria():
    """Paper config (lr 0.1, depth 1, 100 trees): perfect accuracy on
    separable labels; deviance non-increasing; sweep shows overfitting."""
    hp = gboost.GbmHyperparams(learning_rate=0.1, max_depth=1, n_estimators=100,
                               seed=0)
    model, train_acc, test_acc = gboost.train(
        separable_dataset(n_per=60, seed=13),
        FeatureSchema(channels=("a_star", "b_star")), hp)
    assert test_acc == 1.0
    assert train_acc == 1.0
    path = model.metadata["deviance_path"]
    assert all(b <= a + 1e-12 for a, b in zip(path, path[1:]))

    grid = [gboost.GbmHyperparams(0.1, d, 100, seed=3) for d in (1, 3, 5)]
    rows = gboost.sweep(noisy_overlap_dataset(seed=0),
                        FeatureSchema(channels=("a_star", "b_star")), grid).rows
    train = [r.train_accuracy for r in rows]
    test = [r.test_accuracy for r in rows]
    assert train[1] >= train[0] and train[2] >= train[1] and train[2] > train[0]
    assert test[2] <= test[0] + 0.01
    report("gbm (perfect separable accuracy, monotone deviance, overfit direction)")


def test_performance_ordering(trained_model):
    """classify_gbm at least 2x faster than classify_kmeans on 1e5 points
    (median of 5 runs, warmup excluded)."""
    cloud, _ = synth.gen_tree(synth.SynthTreeSpec(point_count=100_000,
                                                  yellow_fraction=0.5, seed=77))

    def median_time(fn):
        fn()  # warmup
        samples = []
        for _ in range(5):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        return statistics.median(samples)

    t_kmeans = median_time(lambda: cluster.classify_kmeans(cloud, n=20, seed=5))
    t_gbm = median_time(lambda: gboost.classify_gbm(cloud, trained_model))
    ratio = t_kmeans / t_gbm
    assert ratio >= 2.0, f"kmeans {t_kmeans:.3f}s / gbm {t_gbm:.3f}s = {ratio:.2f}"
    report(f"performance ordering (kmeans/gbm ratio {ratio:.2f} on 1e5 points)")


def test_statistics_oracle():
    """Pearson, ANOVA (F, p) and Tukey-Kramer adjusted p within 1e-9
    relative of the brute-force oracle on 20 randomized instances
    (5 groups x <=40 samples); equal means give F ~ 0; k groups give
    k(k-1)/2 pairs."""
    rng = np.random.default_rng(20240808)
    for trial in range(20):
        k = 5
        groups = [list(rng.normal(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.5),
                                  int(rng.integers(5, 41))))
                  for _ in range(k)]
        xs = [v for g in groups for v in g]
        ys = [1.3 * v + float(rng.normal(0, 0.7)) for v in xs]
        assert fieldstats.pearson(xs, ys) == pytest.approx(
            brute_pearson(xs, ys), rel=1e-9)
        anova = fieldstats.anova_oneway(groups)
        f_want, p_want, _, _, _ = brute_anova(groups)
        assert anova.f_stat == pytest.approx(f_want, rel=1e-9)
        assert anova.p_value == pytest.approx(p_want, rel=1e-9)
        pairs = fieldstats.tukey_hsd(groups)
        assert len(pairs) == k * (k - 1) // 2
        for pair, (_, _, diff, p) in zip(pairs, brute_tukey(groups)):
            assert pair.mean_diff == pytest.approx(diff, rel=1e-9)
            assert pair.p_adj == pytest.approx(p, rel=1e-9, abs=1e-13)

    equal = fieldstats.anova_oneway([[1.0, 2.0, 3.0], [2.0, 1.0, 3.0],
                                     [3.0, 1.0, 2.0]])
    assert equal.f_stat == pytest.approx(0.0, abs=1e-12)
    report("statistics oracle (20 instances at 1e-9, F=0 on equal means, pair count)")


def test_season_simulation(trained_model):
    """End to end on gen_season: low-N trees cross index 0 strictly before
    high-N trees and every measured per-tree series is non-decreasing."""
    spec = synth.SynthSeasonSpec(
        trees=(("Tn15", 1, 1, 1.5), ("Tn22", 1, 2, 2.2), ("Tn29", 1, 3, 2.9)),
        weeks=6,
        tree_template=synth.SynthTreeSpec(point_count=3000),
        transition_width_weeks=0.8,
        seed=55)
    season = synth.gen_season(spec)
    for method_name, classify in (
        ("kmeans", lambda c, s: cluster.classify_kmeans(c, n=20, seed=s)),
        ("gbm", lambda c, s: gboost.classify_gbm(c, trained_model)),
    ):
        crossings = {}
        for tree_id, _, _, leaf_n in spec.trees:
            series = []
            for week in range(1, spec.weeks + 1):
                cloud = season.clouds[(tree_id, week)]
                value = yindex.yellowness(classify(cloud, week)).value
                series.append(value)
                true_value = next(t.true_index for t in season.truth
                                  if t.tree_id == tree_id and t.week == week)
                assert abs(value - true_value) <= 0.05
            assert all(b >= a for a, b in zip(series, series[1:])), \
                f"{method_name} {tree_id}: {series}"
            crossings[leaf_n] = first_zero_crossing(range(1, spec.weeks + 1), series)
        assert crossings[1.5] < crossings[2.2] < crossings[2.9], \
            f"{method_name}: {crossings}"
    report("season simulation (low-N crosses first, non-decreasing series)")


def test_determinism_byte_identical(tmp_path):
    """Identical config+seed give byte-identical observation and stats
    tables across two full runs."""
    season_dir = tmp_path / "season"
    assert cli_main(["synth", "--kind", "season", "--out", str(season_dir),
                     "--trees", "10", "--weeks", "3", "--points", "800",
                     "--seed", "21"]) == 0
    tables = []
    for run in ("r1", "r2"):
        idx_out = tmp_path / run / "idx"
        stats_out = tmp_path / run / "stats"
        assert cli_main(["index", "--manifest", str(season_dir / "manifest.txt"),
                         "--method", "kmeans", "--seed", "33",
                         "--out", str(idx_out)]) == 0
        assert cli_main(["stats", "--manifest", str(season_dir / "manifest.txt"),
                         "--observations", str(idx_out / "observations.csv"),
                         "--out", str(stats_out)]) == 0
        tables.append((idx_out / "observations.csv").read_bytes()
                      + (stats_out / "stats_report.json").read_bytes()
                      + (stats_out / "map.csv").read_bytes())
    assert tables[0] == tables[1]
    report("determinism (byte-identical observation and stats tables)")
