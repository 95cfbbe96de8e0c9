"""Unsupervised point classification: K-means over (a*, b*) followed by
merging cluster centers into Green/Yellow/Trunk via per-season threshold
windows. Clusters whose center matches no window stay Unassigned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .colorspace import cloud_ab
from .core import GREEN, TRUNK, UNASSIGNED, YELLOW, ClassifiedCloud, ColoredPointCloud
from .errors import DegenerateInputError, EmptyCloudError, ValidationError

INF = math.inf


@dataclass(frozen=True)
class Window:
    """Inclusive (a*, b*) rectangle; bounds may be infinite."""

    a_min: float = -INF
    a_max: float = INF
    b_min: float = -INF
    b_max: float = INF

    def __post_init__(self):
        if self.a_min > self.a_max or self.b_min > self.b_max:
            raise ValidationError(f"window bounds out of order: {self}")

    def contains(self, a: float, b: float) -> bool:
        return self.a_min <= a <= self.a_max and self.b_min <= b <= self.b_max


@dataclass(frozen=True)
class MergeWindows:
    """Class windows checked in the fixed order Green, Yellow, Trunk.

    The published 2023 Yellow and Trunk windows overlap (a* >= 0 with
    45 <= b* <= 50 satisfies both), so containment is resolved by that
    precedence rather than by a disjointness requirement.
    """

    green: Window
    yellow: Window
    trunk: Window

    def label_of(self, a: float, b: float) -> int:
        if self.green.contains(a, b):
            return GREEN
        if self.yellow.contains(a, b):
            return YELLOW
        if self.trunk.contains(a, b):
            return TRUNK
        return UNASSIGNED


#: 2023 season thresholds: Green a* <= -10, 0 <= b* <= 25; Yellow b* >= 45;
#: Trunk a* >= 0, 0 <= b* <= 50.
WINDOWS_2023 = MergeWindows(
    green=Window(a_max=-10.0, b_min=0.0, b_max=25.0),
    yellow=Window(b_min=45.0),
    trunk=Window(a_min=0.0, b_min=0.0, b_max=50.0),
)


def _kmeans_pp_centers(points: np.ndarray, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Deterministic k-means++ seeding given a seeded generator."""
    n_points = points.shape[0]
    centers = np.empty((n, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n_points)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, n):
        total = d2.sum()
        if total <= 0:  # all remaining mass on existing centers: reuse a point
            centers[i:] = points[rng.integers(n_points, size=n - i)]
            break
        cum = np.cumsum(d2)
        j = int(np.searchsorted(cum, rng.random() * total, side="right"))
        centers[i] = points[min(j, n_points - 1)]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans_ab(points, n: int, seed: int = 0, tol: float = 1e-6,
              max_iter: int = 300) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's K-means on (a*, b*) pairs with k-means++ seeding.

    Runs until the largest center movement drops below tol or max_iter
    iterations; points tie-break to the lowest center index. Returns
    (centers (n, 2), assignments (len(points),)).
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValidationError(f"points must be 2-D, got shape {points.shape}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if points.shape[0] < n:
        raise DegenerateInputError(
            f"{points.shape[0]} points cannot form {n} clusters")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_centers(points, n, rng)
    assign = _kernels.assign_nearest(points, centers)
    for _ in range(max_iter):
        new_centers = np.empty_like(centers)
        counts = np.bincount(assign, minlength=n).astype(np.float64)
        for dim in range(points.shape[1]):
            sums = np.bincount(assign, weights=points[:, dim], minlength=n)
            new_centers[:, dim] = np.where(counts > 0, sums / np.maximum(counts, 1),
                                           centers[:, dim])
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        assign = _kernels.assign_nearest(points, centers)
        if shift < tol:
            break
    return centers, assign


def merge_clusters(centers: np.ndarray, assignments: np.ndarray,
                   windows: MergeWindows) -> np.ndarray:
    """Label every point with its cluster's window class (per-point uint8)."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.size == 0:
        raise ValidationError("centers must be nonempty")
    cluster_labels = np.array(
        [windows.label_of(a, b) for a, b in centers], dtype=np.uint8)
    return cluster_labels[assignments]


def classify_kmeans(cloud: ColoredPointCloud, n: int = 20,
                    windows: MergeWindows = WINDOWS_2023,
                    seed: int = 0) -> ClassifiedCloud:
    """Algorithm-1 style classification of a cloud into Green/Yellow/Trunk."""
    if cloud.n_points == 0:
        raise EmptyCloudError("cannot classify an empty cloud")
    ab = cloud_ab(cloud)
    n_eff = min(n, cloud.n_points)  # tiny clouds still classify
    centers, assign = kmeans_ab(ab, n_eff, seed=seed)
    return ClassifiedCloud(cloud, merge_clusters(centers, assign, windows))
