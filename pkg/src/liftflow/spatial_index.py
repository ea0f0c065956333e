"""Exact nearest-neighbor queries in the image plane and in 3D.

The behavior contract is pinned by the brute-force reference scans below:
the fast path (compiled kernel or vectorized numpy, chosen at import) must
return identical ids and distances, with ties broken by the smallest point
id. Indexes are immutable after build and queries are concurrency-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import PointCloud, ProjectedPoints, as_points


@dataclass(eq=False)
class PlanarIndex:
    """Valid projected points, queryable by 2D Euclidean distance."""

    coords: np.ndarray  # (M, 2) image coordinates
    point_ids: np.ndarray  # (M,) original point indices, ascending

    def __len__(self) -> int:
        return self.point_ids.shape[0]


@dataclass(eq=False)
class VolumeIndex:
    """3D positions, queryable by k-nearest-neighbor."""

    coords: np.ndarray  # (N, 3)
    point_ids: np.ndarray  # (N,) ascending

    def __len__(self) -> int:
        return self.point_ids.shape[0]


def build_planar(projected) -> PlanarIndex:
    """Index the valid entries of a projection; invalid ones are dropped.

    Accepts a ProjectedPoints or any iterable of ImagePoint. Raises
    ValueError when nothing is valid (the pipeline cannot proceed).
    """
    if isinstance(projected, ProjectedPoints):
        uv = projected.uv
        valid = projected.valid
    else:
        pts = list(projected)
        uv = np.array([[ip.u, ip.v] for ip in pts], dtype=np.float64).reshape(-1, 2)
        valid = np.array([ip.valid for ip in pts], dtype=bool)
    ids = np.flatnonzero(valid).astype(np.int64)
    if ids.size == 0:
        raise ValueError("no valid projected points to index")
    return PlanarIndex(np.ascontiguousarray(uv[ids]), ids)


def build_volume(points) -> VolumeIndex:
    """Index a point cloud (or raw (N, 3) array) for kNN queries."""
    pts = points.points if isinstance(points, PointCloud) else as_points(points)
    return VolumeIndex(pts, np.arange(pts.shape[0], dtype=np.int64))


def nearest_planar_many(index: PlanarIndex, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest indexed point per (Q, 2) query: (point_ids, distances)."""
    q = np.ascontiguousarray(queries, dtype=np.float64)
    rows, dists = _kernels.nearest_2d(index.coords, q)
    return index.point_ids[rows], dists


def nearest_planar(index: PlanarIndex, q) -> tuple[int, float]:
    """Nearest indexed point to one query; ties go to the smallest point id."""
    ids, dists = nearest_planar_many(index, np.asarray(q, dtype=np.float64).reshape(1, 2))
    return int(ids[0]), float(dists[0])


def knn_volume(index: VolumeIndex, q, k: int, exclude_id: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The min(k, available) nearest points to q, ascending by (distance, id).

    ``exclude_id`` drops one point id from the candidates; pass the query's
    own id when querying a point against its own cloud.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    query = np.ascontiguousarray(np.asarray(q, dtype=np.float64).reshape(1, 3))
    if exclude_id is None:
        excl = np.array([-1], dtype=np.int64)
    else:
        row = int(np.searchsorted(index.point_ids, exclude_id))
        if row >= len(index) or index.point_ids[row] != exclude_id:
            row = -1  # id not in the index: nothing to exclude
        excl = np.array([row], dtype=np.int64)
    rows, dists = _kernels.knn_3d(index.coords, query, k, excl)
    return index.point_ids[rows[0]], dists[0]


def knn_volume_self(index: VolumeIndex, k: int) -> tuple[np.ndarray, np.ndarray]:
    """kNN of every indexed point within its own cloud, self excluded.

    Returns (N, k') ids and distances with k' = min(k, N - 1).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rows = np.arange(len(index), dtype=np.int64)
    ids, dists = _kernels.knn_3d(index.coords, index.coords, k, rows)
    return index.point_ids[ids], dists


def brute_force_nearest(coords: np.ndarray, q, ids: np.ndarray | None = None) -> tuple[int, float]:
    """Reference O(N) scan with the same contract as nearest_planar.

    Dimension-agnostic (works for the 2D and 3D cases); kept deliberately
    plain so it can serve as the test oracle for the fast path.
    """
    coords = np.asarray(coords, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    best_row = 0
    best_d2 = np.inf
    for row in range(coords.shape[0]):
        d2 = 0.0
        for c in range(coords.shape[1]):
            d = coords[row, c] - q[c]
            d2 += d * d
        if d2 < best_d2:
            best_d2 = d2
            best_row = row
    best_id = best_row if ids is None else int(ids[best_row])
    return int(best_id), float(np.sqrt(best_d2))


def brute_force_knn(
    coords: np.ndarray,
    q,
    k: int,
    ids: np.ndarray | None = None,
    exclude_id: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Reference kNN scan: sort every candidate by (squared distance, id)."""
    coords = np.asarray(coords, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    scored = []
    for row in range(coords.shape[0]):
        pid = row if ids is None else int(ids[row])
        if exclude_id is not None and pid == exclude_id:
            continue
        d2 = 0.0
        for c in range(coords.shape[1]):
            d = coords[row, c] - q[c]
            d2 += d * d
        scored.append((d2, pid))
    scored.sort()
    top = scored[: min(k, len(scored))]
    out_ids = np.array([pid for _, pid in top], dtype=np.int64)
    out_dists = np.array([np.sqrt(d2) for d2, _ in top], dtype=np.float64)
    return out_ids, out_dists
