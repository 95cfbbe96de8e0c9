"""Pure-numpy implementations of the hot kernels.

Used whenever the compiled extension is unavailable (or FALLCOLOR_PURE_PYTHON
is set). Must stay semantically identical to _native.pyx: same tie-breaking,
same accumulation order where it affects results.
"""
from __future__ import annotations

import numpy as np


def assign_nearest(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lowest index.

    points (n, d) float64, centers (k, d) float64 -> (n,) int32.
    """
    # ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2; the ||x||^2 term is constant
    # per row and cannot change the argmin, so it is skipped.
    d2 = points @ (-2.0 * centers.T)
    d2 += (centers * centers).sum(axis=1)
    return np.argmin(d2, axis=1).astype(np.int32)


def tree_apply(X: np.ndarray, feature: np.ndarray, threshold: np.ndarray,
               left: np.ndarray, right: np.ndarray, value: np.ndarray,
               out: np.ndarray) -> None:
    """Add each row's leaf value to `out` for one flat-array decision tree.

    Nodes: feature[i] < 0 marks a leaf with value[i]; otherwise a row goes
    left when X[row, feature[i]] <= threshold[i].
    """
    n = X.shape[0]
    if feature[0] < 0:  # single-leaf tree
        out += value[0]
        return
    node = np.zeros(n, dtype=np.int64)
    active = feature[node] >= 0
    while np.any(active):
        idx = node[active]
        go_left = X[np.flatnonzero(active), feature[idx]] <= threshold[idx]
        node[active] = np.where(go_left, left[idx], right[idx])
        active = feature[node] >= 0
    out += value[node]


def ensemble_apply(X: np.ndarray, class_of_tree: np.ndarray, feature: np.ndarray,
                   threshold: np.ndarray, left: np.ndarray, right: np.ndarray,
                   value: np.ndarray, tree_offset: np.ndarray,
                   out: np.ndarray) -> None:
    """Accumulate a whole packed ensemble into out (n, n_classes).

    Trees are packed back to back (tree t spans nodes tree_offset[t] to
    tree_offset[t+1], child indices absolute); tree t adds its leaf values
    to column class_of_tree[t]. Packed order fixes the accumulation order.
    """
    for t in range(len(class_of_tree)):
        root = tree_offset[t]
        k = class_of_tree[t]
        if feature[root] < 0:
            out[:, k] += value[root]
        elif feature[left[root]] < 0 and feature[right[root]] < 0:
            # depth-1 stump: one vectorized pass
            go_left = X[:, feature[root]] <= threshold[root]
            out[:, k] += np.where(go_left, value[left[root]], value[right[root]])
        else:
            column = np.zeros(X.shape[0])
            tree_apply(X, feature[root:], threshold[root:], left[root:] - root,
                       right[root:] - root, value[root:], column)
            out[:, k] += column


def best_boundary(v: np.ndarray, r: np.ndarray) -> tuple[int, float]:
    """Best split position and gain for presorted values v and targets r.

    A split at position i sends rows 0..i left and i+1..n-1 right; only
    boundaries between distinct v are candidates. Gain is the decrease in
    sum of squared deviations; the first position attaining the maximum
    wins. Returns (-1, 0.0) when no boundary exists.
    """
    n = v.shape[0]
    if n < 2:
        return -1, 0.0
    prefix = np.cumsum(r)
    total = prefix[-1]
    cnt = np.arange(1, n, dtype=np.float64)
    left_gain = prefix[:-1] ** 2 / cnt
    right_gain = (total - prefix[:-1]) ** 2 / (n - cnt)
    gains = left_gain + right_gain - total * total / n
    gains[v[:-1] >= v[1:]] = -np.inf  # not a boundary between distinct values
    pos = int(np.argmax(gains))
    gain = float(gains[pos])
    if not np.isfinite(gain):
        return -1, 0.0
    return pos, gain
