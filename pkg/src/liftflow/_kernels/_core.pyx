"""Compiled query kernels: tight loops over contiguous float64 buffers.

Must stay bit-compatible with the numpy fallback: squared distances are
accumulated per axis in the same order ((dx*dx + dy*dy) + dz*dz) and the
build disables FP contraction, so results match IEEE-for-IEEE.
"""

from libc.math cimport INFINITY, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def nearest_2d(double[:, ::1] points, double[:, ::1] queries):
    """For each query, the row index of the closest 2D point and its distance."""
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t q = queries.shape[0]
    idx_arr = np.empty(q, dtype=np.int64)
    dist_arr = np.empty(q, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j, best
    cdef double qu, qv, du, dv, d2, best_d2
    for i in range(q):
        qu = queries[i, 0]
        qv = queries[i, 1]
        best = 0
        best_d2 = INFINITY
        for j in range(m):
            du = points[j, 0] - qu
            dv = points[j, 1] - qv
            d2 = du * du + dv * dv
            if d2 < best_d2:  # strict: first (smallest) id wins ties
                best_d2 = d2
                best = j
        idx[i] = best
        dist[i] = sqrt(best_d2)
    return idx_arr, dist_arr


def nearest_3d_sq(double[:, ::1] points, double[:, ::1] queries):
    """For each query, the row index of the closest 3D point and its squared distance."""
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t q = queries.shape[0]
    idx_arr = np.empty(q, dtype=np.int64)
    sq_arr = np.empty(q, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] sq = sq_arr
    cdef Py_ssize_t i, j, best
    cdef double qx, qy, qz, dx, dy, dz, d2, best_d2
    for i in range(q):
        qx = queries[i, 0]
        qy = queries[i, 1]
        qz = queries[i, 2]
        best = 0
        best_d2 = INFINITY
        for j in range(m):
            dx = points[j, 0] - qx
            dy = points[j, 1] - qy
            dz = points[j, 2] - qz
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < best_d2:
                best_d2 = d2
                best = j
        idx[i] = best
        sq[i] = best_d2
    return idx_arr, sq_arr


def knn_3d(double[:, ::1] points, double[:, ::1] queries, Py_ssize_t k,
           long long[::1] exclude):
    """k nearest 3D points per query, ascending by (squared distance, id).

    ``exclude`` holds one row index per query to skip (-1 for none); rows must
    be uniformly excluded or uniformly not.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t q = queries.shape[0]
    cdef bint excluding = q > 0 and exclude[0] >= 0
    cdef Py_ssize_t kk = min(k, n - 1 if excluding else n)
    if kk <= 0:
        return np.empty((q, 0), dtype=np.int64), np.empty((q, 0), dtype=np.float64)
    idx_arr = np.empty((q, kk), dtype=np.int64)
    dist_arr = np.empty((q, kk), dtype=np.float64)
    cdef long long[:, ::1] idx = idx_arr
    cdef double[:, ::1] dist = dist_arr
    buf_d2_arr = np.empty(kk, dtype=np.float64)
    buf_id_arr = np.empty(kk, dtype=np.int64)
    cdef double[::1] buf_d2 = buf_d2_arr
    cdef long long[::1] buf_id = buf_id_arr
    cdef Py_ssize_t i, j, count, pos
    cdef long long skip
    cdef double qx, qy, qz, dx, dy, dz, d2
    for i in range(q):
        qx = queries[i, 0]
        qy = queries[i, 1]
        qz = queries[i, 2]
        skip = exclude[i]
        count = 0
        for j in range(n):
            if j == skip:
                continue
            dx = points[j, 0] - qx
            dy = points[j, 1] - qy
            dz = points[j, 2] - qz
            d2 = dx * dx + dy * dy + dz * dz
            if count < kk:
                pos = count
                count += 1
            elif d2 < buf_d2[kk - 1] or (d2 == buf_d2[kk - 1] and j < buf_id[kk - 1]):
                pos = kk - 1
            else:
                continue
            # insertion by (d2, id); j exceeds any buffered id so the d2 == case
            # during the shift never needs an id comparison
            while pos > 0 and d2 < buf_d2[pos - 1]:
                buf_d2[pos] = buf_d2[pos - 1]
                buf_id[pos] = buf_id[pos - 1]
                pos -= 1
            buf_d2[pos] = d2
            buf_id[pos] = j
        for pos in range(kk):
            idx[i, pos] = buf_id[pos]
            dist[i, pos] = sqrt(buf_d2[pos])
    return idx_arr, dist_arr
