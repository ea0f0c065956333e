"""Per-label confidence: distance-kernel scoring plus neighborhood refinement.

The initial score measures how close a label's 3D correspondence lands to the
second cloud when both are viewed in the image plane: a correspondence far
from every projected point is probably wrong. Refinement then blends each
score with its spatial neighbors', weighted by how similar the flow labels
are, so isolated high scores among disagreeing neighbors get pulled down.
Scores are soft weights in (0, 1]; invalid labels are pinned at 0 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraModel, PointCloud, project_cloud
from .label_gen import PseudoLabelSet
from .spatial_index import build_planar, build_volume, knn_volume_self, nearest_planar_many


@dataclass
class NoiseParams:
    """Knobs of the confidence model.

    theta        image-distance threshold: closer than this scores 1, else 1/d
    lam          blend weight between own score and the neighborhood term
    tau          label-similarity temperature in meters
    k_neighbors  neighborhood size for refinement
    """

    theta: float = 2.0
    lam: float = 0.25
    tau: float = 0.1
    k_neighbors: int = 8

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")


@dataclass(eq=False)
class ConfidenceVector:
    """Initial and refined per-label weights, aligned with the label set."""

    initial: np.ndarray
    refined: np.ndarray

    def __len__(self) -> int:
        return self.initial.shape[0]


def confidence_kernel(d, theta: float = 2.0):
    """Distance-to-weight kernel: 1 below the threshold, 1/d from it on.

    Non-increasing on [theta, inf) with range (0, 1]. Note the jump at the
    threshold itself: d == theta already takes the 1/d branch. Accepts
    scalars or arrays.
    """
    arr = np.asarray(d, dtype=np.float64)
    far = arr >= theta
    out = np.where(far, np.divide(1.0, arr, out=np.ones_like(arr), where=far), 1.0)
    if arr.ndim == 0:
        return float(out)
    return out


def initial_confidence(
    labels: PseudoLabelSet,
    cloud_t1: PointCloud,
    cam: CameraModel,
    params: NoiseParams | None = None,
) -> np.ndarray:
    """Score each label by its correspondence's image distance to the second cloud.

    The stored 3D correspondence is re-projected and matched against the
    projected second cloud, so labels loaded from disk or perturbed after
    generation are scored on their actual geometry. Invalid labels (and
    correspondences that no longer project) get weight 0.
    """
    params = params or NoiseParams()
    proj_t1 = project_cloud(cloud_t1, cam)
    if not proj_t1.valid.any():
        raise ValueError("second cloud has no valid projections; cannot score labels")
    index = build_planar(proj_t1)

    weights = np.zeros(len(labels), dtype=np.float64)
    proj_corr = project_cloud(labels.corr3d, cam)
    scorable = labels.valid & proj_corr.valid
    if scorable.any():
        sel = np.flatnonzero(scorable)
        _, dists = nearest_planar_many(index, proj_corr.uv[sel])
        weights[sel] = confidence_kernel(dists, params.theta)
    return weights


def refine_confidence(
    labels: PseudoLabelSet,
    cloud_t: PointCloud,
    weights: np.ndarray,
    params: NoiseParams | None = None,
) -> np.ndarray:
    """One blending pass of each weight with its spatial neighborhood.

    For every positively-weighted point, the k nearest cloud points (self
    excluded) contribute their weight scaled by exp(-|flow difference|/tau);
    the result is lam * own + (1 - lam) * neighborhood mean. Zero-weight
    points stay at zero. Applied exactly once.
    """
    params = params or NoiseParams()
    weights = np.asarray(weights, dtype=np.float64)
    if len(labels) != len(cloud_t) or weights.shape != (len(labels),):
        raise ValueError("labels, cloud, and weights must have matching lengths")
    if len(cloud_t) < 2:
        raise ValueError("refinement needs at least two points to form a neighborhood")

    index = build_volume(cloud_t)
    nb_ids, _ = knn_volume_self(index, params.k_neighbors)
    k_actual = nb_ids.shape[1]

    diff = labels.flow[nb_ids] - labels.flow[:, None, :]
    label_dist = np.sqrt((diff * diff).sum(axis=2))
    affinity = np.exp(-label_dist / params.tau)
    neighborhood = (weights[nb_ids] * affinity).sum(axis=1) / k_actual

    refined = params.lam * weights + (1.0 - params.lam) * neighborhood
    return np.where(weights > 0.0, refined, 0.0)


def score_labels(
    labels: PseudoLabelSet,
    cloud_t: PointCloud,
    cloud_t1: PointCloud,
    cam: CameraModel,
    params: NoiseParams | None = None,
) -> ConfidenceVector:
    """Both confidence passes in sequence."""
    params = params or NoiseParams()
    initial = initial_confidence(labels, cloud_t1, cam, params)
    refined = refine_confidence(labels, cloud_t, initial, params)
    return ConfidenceVector(initial=initial, refined=refined)
