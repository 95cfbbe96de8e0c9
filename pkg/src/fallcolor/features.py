"""Per-point feature vectors: color channels plus local eigen-structure.

Eigen features describe the shape of the k-nearest neighborhood (planar
leaf clusters vs. linear branches): eigenvalues of the 3x3 neighborhood
covariance sorted descending, with their unit eigenvectors.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .core import (COLOR_FEATURES, EIGEN_FEATURES, ColoredPointCloud,
                   FeatureSchema, LabeledPointRecord)
from .errors import InsufficientPointsError
from .colorspace import rgb_to_lab


def _fix_eigvec_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each eigenvector's largest-magnitude component positive.

    eigh returns vectors up to sign; a fixed convention keeps datasets and
    serialized features reproducible across runs and platforms.
    """
    comp = np.argmax(np.abs(vectors), axis=-1)
    sign = np.sign(np.take_along_axis(vectors, comp[..., None], axis=-1))
    sign[sign == 0] = 1.0
    return vectors * sign


def _eigen_of_neighborhood(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues and row-wise unit eigenvectors of the 3x3
    covariance (1/k normalization) of one neighborhood's coordinates."""
    centered = coords - coords.mean(axis=0)
    cov = centered.T @ centered / coords.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = evals.argsort()[::-1]
    evals = np.maximum(evals[order], 0.0)
    evecs = _fix_eigvec_signs(evecs[:, order].T)
    return evals, evecs


def _neighbor_indices_exact(xyz: np.ndarray, tree: cKDTree, point_index: int,
                            k: int) -> np.ndarray:
    """The k nearest neighbors of one point, self excluded, ties on equal
    distance broken by lower point index."""
    dists, idx = tree.query(xyz[point_index], k=k + 1)
    kth = float(np.max(dists))
    candidates = np.array(tree.query_ball_point(xyz[point_index], kth * (1 + 1e-12)),
                          dtype=np.int64)
    candidates = candidates[candidates != point_index]
    d = np.linalg.norm(xyz[candidates] - xyz[point_index], axis=1)
    order = np.lexsort((candidates, d))
    return candidates[order[:k]]


def neighborhood_eigen(cloud: ColoredPointCloud, point_index: int,
                       k: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the covariance of a point's k nearest neighbors.

    Returns (eigenvalues (3,), eigenvectors (3, 3)) with eigenvalues
    descending and eigenvectors[i] the unit vector for eigenvalues[i].
    """
    if k < 3:
        raise InsufficientPointsError(f"k must be >= 3, got {k}")
    if cloud.n_points < k + 1:
        raise InsufficientPointsError(
            f"need at least {k + 1} points for k={k} neighbors, "
            f"cloud has {cloud.n_points}")
    xyz = cloud.xyz.astype(np.float64)
    tree = cKDTree(xyz)
    neighbors = _neighbor_indices_exact(xyz, tree, point_index, k)
    return _eigen_of_neighborhood(xyz[neighbors])


def neighborhood_eigen_all(cloud: ColoredPointCloud,
                           k: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Batch neighborhood_eigen over every point: ((n, 3) values, (n, 3, 3) vectors)."""
    n = cloud.n_points
    if k < 3:
        raise InsufficientPointsError(f"k must be >= 3, got {k}")
    if n < k + 1:
        raise InsufficientPointsError(
            f"need at least {k + 1} points for k={k} neighbors, cloud has {n}")
    xyz = cloud.xyz.astype(np.float64)
    tree = cKDTree(xyz)
    # one extra neighbor exposes ties that straddle the k-th boundary
    dists, idx = tree.query(xyz, k=min(k + 2, n))
    neigh = np.empty((n, k), dtype=np.int64)
    boundary_tie = dists[:, -1] <= dists[:, -2] * (1 + 1e-12)
    for i in range(n):
        if boundary_tie[i]:
            neigh[i] = _neighbor_indices_exact(xyz, tree, i, k)
        else:
            row = idx[i][idx[i] != i][:k]
            neigh[i] = row
    coords = xyz[neigh]  # (n, k, 3)
    centered = coords - coords.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, axis=1)[:, ::-1]
    evals = np.maximum(np.take_along_axis(evals, order, axis=1), 0.0)
    evecs = np.transpose(evecs, (0, 2, 1))  # rows become eigenvectors
    evecs = np.take_along_axis(evecs, order[:, :, None], axis=1)
    return evals, _fix_eigvec_signs(evecs)


def featurize(cloud: ColoredPointCloud, schema: FeatureSchema) -> np.ndarray:
    """One feature vector per point, (n, arity) float64, point order preserved."""
    n = cloud.n_points
    columns: dict[str, np.ndarray] = {}
    need_color = any(c in COLOR_FEATURES for c in schema.channels)
    if need_color:
        lab = rgb_to_lab(cloud.rgb)
        columns["a_star"] = lab[:, 1]
        columns["b_star"] = lab[:, 2]
        rgbf = cloud.rgb.astype(np.float64)
        columns["r"], columns["g"], columns["b"] = rgbf[:, 0], rgbf[:, 1], rgbf[:, 2]
    if schema.uses_eigen:
        evals, evecs = neighborhood_eigen_all(cloud, schema.neighbor_k)
        columns["eig1"], columns["eig2"], columns["eig3"] = evals.T
        flat = evecs.reshape(n, 9)
        for j, name in enumerate(EIGEN_FEATURES[3:]):
            columns[name] = flat[:, j]
    out = np.empty((n, schema.arity), dtype=np.float64)
    for j, name in enumerate(schema.channels):
        out[:, j] = columns[name]
    return out


def records_from_points(cloud: ColoredPointCloud, point_indices, labels,
                        k: int = 30) -> list[LabeledPointRecord]:
    """Full labeled records (color + eigen features) for selected points."""
    point_indices = np.asarray(point_indices, dtype=np.int64)
    lab = rgb_to_lab(cloud.rgb[point_indices])
    records = []
    for row, (i, label) in enumerate(zip(point_indices, labels)):
        evals, evecs = neighborhood_eigen(cloud, int(i), k)
        r, g, b = (int(v) for v in cloud.rgb[i])
        records.append(LabeledPointRecord(
            label=label, a_star=float(lab[row, 1]), b_star=float(lab[row, 2]),
            r=r, g=g, b=b, eigenvalues=evals, eigenvectors=evecs))
    return records
