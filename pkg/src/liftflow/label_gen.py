"""Pseudo scene-flow labels: project, follow the 2D flow, match, lift.

For every point of the first cloud: project it to the image plane, read the
2D flow there, displace to the 2D correspondence, match the nearest projected
point of the second cloud, borrow that point's camera depth to lift the 2D
correspondence to 3D, and difference against the source point.

A label is invalid when the source point does not project (at or behind the
camera plane) or its flow sample falls outside the field. Invalid labels stay
in the output with zero flow so indices keep lining up with the cloud; they
are excluded downstream through zero confidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow_field import FlowField2D, sample_flow_many
from .geometry import DEPTH_EPSILON, CameraModel, PointCloud, lift_points, project_cloud
from .spatial_index import build_planar, nearest_planar_many


@dataclass(eq=False)
class PseudoLabelSet:
    """Per-point label data, aligned with the first cloud.

    flow            (N, 3) pseudo flow label, zeros when invalid
    corr3d          (N, 3) lifted 3D correspondence, the point itself when invalid
    corr2d          (N, 2) displaced image coordinates, NaN when invalid
    nn_2d_distance  (N,)   image distance to the matched projection, NaN when invalid
    nn_point_id     (N,)   matched index into the second cloud, -1 when invalid
    z_star          (N,)   camera depth borrowed for lifting, NaN when invalid
    valid           (N,)   bool

    For valid entries flow == corr3d - points holds exactly by construction.
    """

    flow: np.ndarray
    corr3d: np.ndarray
    corr2d: np.ndarray
    nn_2d_distance: np.ndarray
    nn_point_id: np.ndarray
    z_star: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        n = self.flow.shape[0]
        shapes = {
            "flow": (n, 3),
            "corr3d": (n, 3),
            "corr2d": (n, 2),
            "nn_2d_distance": (n,),
            "nn_point_id": (n,),
            "z_star": (n,),
            "valid": (n,),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise ValueError(f"label field {name} has shape {got}, expected {want}")

    def __len__(self) -> int:
        return self.flow.shape[0]


def generate_pseudo_labels(
    cloud_t: PointCloud,
    cloud_t1: PointCloud,
    cam: CameraModel,
    flow: FlowField2D,
    depth_epsilon: float = DEPTH_EPSILON,
) -> PseudoLabelSet:
    """Produce a pseudo flow label for every point of ``cloud_t``.

    Raises ValueError when no point of ``cloud_t1`` projects validly (there
    is nothing to match against).
    """
    proj_t = project_cloud(cloud_t, cam, depth_epsilon)
    proj_t1 = project_cloud(cloud_t1, cam, depth_epsilon)
    if not proj_t1.valid.any():
        raise ValueError("second cloud has no valid projections; cannot match correspondences")
    index = build_planar(proj_t1)

    flows_2d, in_bounds = sample_flow_many(flow, proj_t.uv)
    valid = proj_t.valid & in_bounds

    n = len(cloud_t)
    out_flow = np.zeros((n, 3), dtype=np.float64)
    corr3d = cloud_t.points.copy()
    corr2d = np.full((n, 2), np.nan)
    nn_dist = np.full(n, np.nan)
    nn_id = np.full(n, -1, dtype=np.int64)
    z_star = np.full(n, np.nan)

    if valid.any():
        sel = np.flatnonzero(valid)
        corr = proj_t.uv[sel] + flows_2d[sel]
        ids, dists = nearest_planar_many(index, corr)
        depths = proj_t1.depth[ids]
        lifted = lift_points(corr, depths, cam)
        corr2d[sel] = corr
        nn_dist[sel] = dists
        nn_id[sel] = ids
        z_star[sel] = depths
        corr3d[sel] = lifted
        out_flow[sel] = lifted - cloud_t.points[sel]

    return PseudoLabelSet(
        flow=out_flow,
        corr3d=corr3d,
        corr2d=corr2d,
        nn_2d_distance=nn_dist,
        nn_point_id=nn_id,
        z_star=z_star,
        valid=valid,
    )
