#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Micro-benchmarks run both implementations in-process; the end-to-end
classification comparison spawns one subprocess per backend because the
backend is chosen at import time.

Usage: python3 benchmarks/bench_backends.py [--points N]
"""
import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from fallcolor._kernels import _numpy

try:
    from fallcolor._kernels import _native
except ImportError:
    _native = None


def median_time(fn, runs=7):
    fn()
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench_kernels(n_points):
    rng = np.random.default_rng(0)
    points = rng.normal(0, 20, (n_points, 2))
    centers = rng.normal(0, 20, (20, 2))

    # a packed 300-stump ensemble, the shape the default model produces
    m = 300
    feature = np.zeros(3 * m, dtype=np.int32)
    threshold = np.zeros(3 * m)
    left = np.zeros(3 * m, dtype=np.int32)
    right = np.zeros(3 * m, dtype=np.int32)
    value = np.zeros(3 * m)
    offsets = np.arange(0, 3 * m + 1, 3, dtype=np.int32)
    for t in range(m):
        root = 3 * t
        feature[root] = rng.integers(5)
        threshold[root] = rng.normal()
        feature[root + 1] = feature[root + 2] = -1
        left[root], right[root] = root + 1, root + 2
        value[root + 1], value[root + 2] = rng.normal(), rng.normal()
    class_of_tree = (np.arange(m) % 3).astype(np.int32)
    X = rng.normal(size=(n_points, 5))

    v_sorted = np.sort(rng.normal(size=n_points))
    residuals = rng.normal(size=n_points)

    rows = []
    for name, impl in [("numpy", _numpy)] + ([("native", _native)] if _native else []):
        out = np.zeros((n_points, 3))
        rows.append((name, {
            "assign_nearest": median_time(lambda: impl.assign_nearest(points, centers)),
            "ensemble_apply(300 stumps)": median_time(
                lambda: impl.ensemble_apply(X, class_of_tree, feature, threshold,
                                            left, right, value, offsets, out)),
            "best_boundary": median_time(
                lambda: impl.best_boundary(v_sorted, residuals)),
        }))
    return rows


END_TO_END_CODE = """
import statistics, time
import fallcolor
from fallcolor import cluster, gboost, synth
from fallcolor.core import FeatureSchema

ds = synth.gen_label_dataset(synth.SynthTreeSpec(point_count=6000,
    yellow_fraction=0.4, trunk_fraction=0.2, seed=101), per_class=150)
model, _, _ = gboost.train(ds, FeatureSchema(), gboost.GbmHyperparams(seed=7))
cloud, _ = synth.gen_tree(synth.SynthTreeSpec(point_count={n}, yellow_fraction=0.5,
    seed=77))

def med(fn):
    fn()
    ts = []
    for _ in range(5):
        t0 = time.perf_counter(); fn(); ts.append(time.perf_counter() - t0)
    return statistics.median(ts)

km = med(lambda: cluster.classify_kmeans(cloud, n=20, seed=5))
gb = med(lambda: gboost.classify_gbm(cloud, model))
print(f"{{fallcolor.KERNEL_BACKEND}} classify_kmeans {{km*1000:8.1f}} ms   "
      f"classify_gbm {{gb*1000:7.1f}} ms   ratio {{km/gb:5.2f}}")
"""


def bench_end_to_end(n_points):
    for env_extra in ({}, {"FALLCOLOR_PURE_PYTHON": "1"}):
        env = dict(os.environ, **env_extra)
        subprocess.run([sys.executable, "-c", END_TO_END_CODE.format(n=n_points)],
                       env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=100_000)
    args = parser.parse_args()

    print(f"kernel micro-benchmarks ({args.points} points, median of 7)")
    for name, times in bench_kernels(args.points):
        for op, seconds in times.items():
            print(f"  {name:6s} {op:28s} {seconds * 1000:8.2f} ms")
    if _native is None:
        print("  (compiled backend not available; numpy fallback only)")

    print("\nend-to-end classification (median of 5, warmup excluded)")
    sys.stdout.flush()  # keep parent output ahead of subprocess output
    bench_end_to_end(args.points)


if __name__ == "__main__":
    main()
