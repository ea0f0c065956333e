"""Vectorized numpy implementations of the hot query kernels.

Behavioral twin of the compiled core: identical ids and distances, including
tie handling (lexicographic by (squared distance, id)). Distance sums are
written out per axis so the association matches the C code exactly.
"""

from __future__ import annotations

import numpy as np

# Queries per block; bounds the temporary (block x N) distance matrices.
_CHUNK = 512


def nearest_2d(points: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each query, the row index of the closest 2D point and its distance."""
    q = queries.shape[0]
    idx = np.empty(q, dtype=np.int64)
    dist = np.empty(q, dtype=np.float64)
    for s in range(0, q, _CHUNK):
        blk = queries[s : s + _CHUNK]
        dx = blk[:, 0:1] - points[None, :, 0]
        dy = blk[:, 1:2] - points[None, :, 1]
        d2 = dx * dx + dy * dy
        rows = np.argmin(d2, axis=1)  # first occurrence: smallest id wins ties
        idx[s : s + _CHUNK] = rows
        dist[s : s + _CHUNK] = np.sqrt(d2[np.arange(rows.shape[0]), rows])
    return idx, dist


def nearest_3d_sq(points: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each query, the row index of the closest 3D point and its squared distance."""
    q = queries.shape[0]
    idx = np.empty(q, dtype=np.int64)
    sq = np.empty(q, dtype=np.float64)
    for s in range(0, q, _CHUNK):
        blk = queries[s : s + _CHUNK]
        dx = blk[:, 0:1] - points[None, :, 0]
        dy = blk[:, 1:2] - points[None, :, 1]
        dz = blk[:, 2:3] - points[None, :, 2]
        d2 = dx * dx + dy * dy + dz * dz
        rows = np.argmin(d2, axis=1)
        idx[s : s + _CHUNK] = rows
        sq[s : s + _CHUNK] = d2[np.arange(rows.shape[0]), rows]
    return idx, sq


def knn_3d(
    points: np.ndarray,
    queries: np.ndarray,
    k: int,
    exclude: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """k nearest 3D points per query, ascending by (squared distance, id).

    ``exclude`` holds one row index per query to skip (-1 for none); rows must
    be uniformly excluded or uniformly not, so every query has the same number
    of candidates.
    """
    n = points.shape[0]
    q = queries.shape[0]
    excluding = bool(exclude[0] >= 0) if q else False
    kk = min(k, n - 1 if excluding else n)
    if kk <= 0:
        return np.empty((q, 0), dtype=np.int64), np.empty((q, 0), dtype=np.float64)
    idx = np.empty((q, kk), dtype=np.int64)
    dist = np.empty((q, kk), dtype=np.float64)
    for s in range(0, q, _CHUNK):
        blk = queries[s : s + _CHUNK]
        dx = blk[:, 0:1] - points[None, :, 0]
        dy = blk[:, 1:2] - points[None, :, 1]
        dz = blk[:, 2:3] - points[None, :, 2]
        d2 = dx * dx + dy * dy + dz * dz
        if excluding:
            rows = np.arange(blk.shape[0])
            d2[rows, exclude[s : s + _CHUNK]] = np.inf
        # stable sort on d2 leaves ties in id order: exactly (d2, id) lexicographic
        order = np.argsort(d2, axis=1, kind="stable")[:, :kk]
        idx[s : s + _CHUNK] = order
        dist[s : s + _CHUNK] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return idx, dist
