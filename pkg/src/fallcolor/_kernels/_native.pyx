# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels.

Semantics must match _numpy.py exactly: same tie-breaking, same
accumulation order where it affects results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def assign_nearest(double[:, ::1] points, double[:, ::1] centers):
    """Index of the nearest center per point; ties go to the lowest index."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t k = centers.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    out_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] out = out_arr
    cdef Py_ssize_t i, j, c
    cdef double best, dist, diff
    cdef int best_c
    with nogil:
        for i in range(n):
            best = 1e308
            best_c = 0
            for c in range(k):
                dist = 0.0
                for j in range(d):
                    diff = points[i, j] - centers[c, j]
                    dist += diff * diff
                if dist < best:
                    best = dist
                    best_c = <int>c
            out[i] = best_c
    return out_arr


def tree_apply(double[:, ::1] X, int[::1] feature, double[::1] threshold,
               int[::1] left, int[::1] right, double[::1] value,
               double[::1] out):
    """Add each row's leaf value to `out` for one flat-array decision tree."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i
    cdef int node
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += value[node]


def ensemble_apply(double[:, ::1] X, int[::1] class_of_tree, int[::1] feature,
                   double[::1] threshold, int[::1] left, int[::1] right,
                   double[::1] value, int[::1] tree_offset,
                   double[:, ::1] out):
    """Accumulate a whole packed ensemble into out (n, n_classes).

    Cache-blocked: points are processed in blocks with tree metadata hoisted
    per block, and depth-1 stumps take a branch-free-ish fast path. Per
    point the trees still accumulate in packed order, matching the numpy
    fallback bit for bit.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_feat = X.shape[1]
    cdef Py_ssize_t n_class = out.shape[1]
    cdef Py_ssize_t m = class_of_tree.shape[0]
    cdef Py_ssize_t block = 4096
    cdef Py_ssize_t bstart, bend, blen, i, t, f_idx, k_idx
    cdef int node, root, f, k, lnode, rnode
    cdef double thr, lval, rval, val
    # per-block scratch: feature columns contiguous, per-class accumulators
    cols_arr = np.empty((n_feat, block), dtype=np.float64)
    acc_arr = np.empty((n_class, block), dtype=np.float64)
    cdef double[:, ::1] cols = cols_arr
    cdef double[:, ::1] acc = acc_arr
    with nogil:
        bstart = 0
        while bstart < n:
            bend = bstart + block
            if bend > n:
                bend = n
            blen = bend - bstart
            for f_idx in range(n_feat):
                for i in range(blen):
                    cols[f_idx, i] = X[bstart + i, f_idx]
            for k_idx in range(n_class):
                for i in range(blen):
                    acc[k_idx, i] = out[bstart + i, k_idx]
            for t in range(m):
                root = tree_offset[t]
                k = class_of_tree[t]
                f = feature[root]
                if f < 0:  # single leaf
                    val = value[root]
                    for i in range(blen):
                        acc[k, i] += val
                    continue
                lnode = left[root]
                rnode = right[root]
                if feature[lnode] < 0 and feature[rnode] < 0:  # stump
                    thr = threshold[root]
                    lval = value[lnode]
                    rval = value[rnode]
                    for i in range(blen):
                        acc[k, i] += lval if cols[f, i] <= thr else rval
                    continue
                for i in range(blen):
                    node = root
                    while feature[node] >= 0:
                        if cols[feature[node], i] <= threshold[node]:
                            node = left[node]
                        else:
                            node = right[node]
                    acc[k, i] += value[node]
            for k_idx in range(n_class):
                for i in range(blen):
                    out[bstart + i, k_idx] = acc[k_idx, i]
            bstart = bend


def best_boundary(double[::1] v, double[::1] r):
    """Best split position and gain for presorted values v and targets r."""
    cdef Py_ssize_t n = v.shape[0]
    if n < 2:
        return -1, 0.0
    cdef double total = 0.0
    cdef double prefix = 0.0
    cdef double base, gain, best_gain
    cdef Py_ssize_t i, best_pos
    with nogil:
        for i in range(n):
            total += r[i]
        base = total * total / n
        best_gain = -1e308
        best_pos = -1
        for i in range(n - 1):
            prefix += r[i]
            if v[i] >= v[i + 1]:
                continue
            gain = prefix * prefix / (i + 1) \
                + (total - prefix) * (total - prefix) / (n - i - 1) - base
            if gain > best_gain:
                best_gain = gain
                best_pos = i
    if best_pos < 0:
        return -1, 0.0
    return best_pos, best_gain
