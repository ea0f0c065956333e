"""Synthetic rigid scenes with analytic ground-truth flow.

Scenes are built from simple objects (camera-facing box faces sampled on a
regular grid, spheres sampled randomly) under rigid motion, so every point
of the first cloud has an exact moved twin and gt_flow is known in closed
form. A flow field rendered from such a scene reproduces the projected
displacement exactly at every projected point, which makes the whole label
pipeline testable without datasets. Corruption utilities perturb a seeded
fraction of labels or flow cells for the noise-model benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow_field import FlowField2D
from .geometry import CameraModel, PointCloud, project_cloud
from .label_gen import PseudoLabelSet


def rotation_matrix(axis, degrees: float) -> np.ndarray:
    """Rodrigues rotation about an arbitrary axis."""
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.sqrt((axis * axis).sum())
    if norm == 0.0:
        raise ValueError("rotation axis must be non-zero")
    x, y, z = axis / norm
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


@dataclass
class ObjectSpec:
    """One rigid object: a sampled surface plus its motion.

    "box" samples the camera-facing face (the only face with image evidence)
    on a regular grid; size gives the face extents (sx, sy) and the face sits
    at depth center[2]. "sphere" samples n_points seeded-random directions at
    the given radius. Motion rotates about an axis through the object center,
    then translates.
    """

    shape: str = "box"
    center: tuple = (0.0, 0.0, 5.0)
    size: tuple = (2.0, 2.0)  # box face extents; spheres use size[0] as radius
    grid: tuple = (12, 12)  # box sampling
    n_points: int = 200  # sphere sampling
    rotation_axis: tuple = (0.0, 0.0, 1.0)
    rotation_deg: float = 0.0
    translation: tuple = (0.0, 0.0, 0.0)


@dataclass
class SceneSpec:
    objects: list
    camera: CameraModel
    image_size: tuple  # (width, height)
    seed: int = 0


@dataclass(eq=False)
class RigidScene:
    cloud_t: PointCloud
    cloud_t1: PointCloud
    gt_flow: np.ndarray  # (N, 3), aligned with cloud_t


def _sample_object(obj: ObjectSpec, rng: np.random.Generator) -> np.ndarray:
    center = np.asarray(obj.center, dtype=np.float64)
    if obj.shape == "box":
        nu, nv = obj.grid
        if nu < 2 or nv < 2:
            raise ValueError("box grid needs at least 2 samples per side")
        xs = np.linspace(-obj.size[0] / 2.0, obj.size[0] / 2.0, nu)
        ys = np.linspace(-obj.size[1] / 2.0, obj.size[1] / 2.0, nv)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), np.zeros(nu * nv)], axis=1)
        return center + pts
    if obj.shape == "sphere":
        if obj.n_points < 1:
            raise ValueError("sphere needs at least one point")
        dirs = rng.normal(size=(obj.n_points, 3))
        dirs /= np.sqrt((dirs * dirs).sum(axis=1, keepdims=True))
        return center + obj.size[0] * dirs
    raise ValueError(f"unknown object shape {obj.shape!r}")


def _resample_object(obj: ObjectSpec, rng: np.random.Generator, factor: float) -> np.ndarray:
    """Fresh, independent surface samples (no pointwise correspondence)."""
    center = np.asarray(obj.center, dtype=np.float64)
    if obj.shape == "box":
        n = max(2, int(round(obj.grid[0] * obj.grid[1] * factor)))
        a = rng.uniform(-obj.size[0] / 2.0, obj.size[0] / 2.0, size=n)
        b = rng.uniform(-obj.size[1] / 2.0, obj.size[1] / 2.0, size=n)
        return center + np.stack([a, b, np.zeros(n)], axis=1)
    if obj.shape == "sphere":
        n = max(2, int(round(obj.n_points * factor)))
        dirs = rng.normal(size=(n, 3))
        dirs /= np.sqrt((dirs * dirs).sum(axis=1, keepdims=True))
        return center + obj.size[0] * dirs
    raise ValueError(f"unknown object shape {obj.shape!r}")


def _apply_motion(obj: ObjectSpec, pts: np.ndarray) -> np.ndarray:
    center = np.asarray(obj.center, dtype=np.float64)
    rot = rotation_matrix(obj.rotation_axis, obj.rotation_deg)
    return center + (pts - center) @ rot.T + np.asarray(obj.translation, dtype=np.float64)


def make_rigid_scene(spec: SceneSpec) -> RigidScene:
    """Perfect-correspondence scene: the second cloud is the first one moved."""
    rng = np.random.default_rng(spec.seed)
    parts_t, parts_t1 = [], []
    for obj in spec.objects:
        pts = _sample_object(obj, rng)
        parts_t.append(pts)
        parts_t1.append(_apply_motion(obj, pts))
    cloud_t = np.concatenate(parts_t)
    cloud_t1 = np.concatenate(parts_t1)
    return RigidScene(
        cloud_t=PointCloud(cloud_t, frame_id="t"),
        cloud_t1=PointCloud(cloud_t1, frame_id="t+1"),
        gt_flow=cloud_t1 - cloud_t,
    )


def make_resampled_scene(spec: SceneSpec, density: float = 2.0) -> RigidScene:
    """Scene whose second cloud is sampled independently on the moved surfaces.

    gt_flow still describes the true motion of the first cloud's points, but
    no point of the second cloud coincides with a moved first-cloud point, so
    depth lifting becomes an approximation (as on real data).
    """
    rng = np.random.default_rng(spec.seed)
    resample_rng = np.random.default_rng(spec.seed + 1)
    parts_t, parts_flow, parts_t1 = [], [], []
    for obj in spec.objects:
        pts = _sample_object(obj, rng)
        parts_t.append(pts)
        parts_flow.append(_apply_motion(obj, pts) - pts)
        parts_t1.append(_apply_motion(obj, _resample_object(obj, resample_rng, density)))
    return RigidScene(
        cloud_t=PointCloud(np.concatenate(parts_t), frame_id="t"),
        cloud_t1=PointCloud(np.concatenate(parts_t1), frame_id="t+1"),
        gt_flow=np.concatenate(parts_flow),
    )


def render_exact_flow_field(
    cloud_t: PointCloud,
    gt_flow: np.ndarray,
    cam: CameraModel,
    image_size: tuple,
) -> FlowField2D:
    """Rasterize the true projected displacements into a sampleable field.

    Each point's 2D flow is written to all four grid cells around its
    projection, so bilinear sampling at the projection returns it exactly;
    remaining cells are filled with the nearest written value (ties to the
    smallest row-major cell). Raises when a projection (original or moved)
    leaves the image, or when two points need conflicting values in one cell
    (the scene is too dense for an exact field).
    """
    width, height = int(image_size[0]), int(image_size[1])
    gt_flow = np.asarray(gt_flow, dtype=np.float64)
    proj0 = project_cloud(cloud_t, cam)
    proj1 = project_cloud(cloud_t.points + gt_flow, cam)
    if not (proj0.valid.all() and proj1.valid.all()):
        raise ValueError("every point and its moved twin must project in front of the camera")
    for name, proj in (("original", proj0), ("moved", proj1)):
        u, v = proj.uv[:, 0], proj.uv[:, 1]
        if (u < 0).any() or (u > width - 1).any() or (v < 0).any() or (v > height - 1).any():
            raise ValueError(f"{name} projections fall outside the {width}x{height} image")

    flow_2d = proj1.uv - proj0.uv
    grid = np.zeros((height, width, 2), dtype=np.float64)
    written = np.zeros((height, width), dtype=bool)
    for i in range(len(cloud_t)):
        u, v = proj0.uv[i]
        c0 = min(int(np.floor(u)), width - 2)
        r0 = min(int(np.floor(v)), height - 2)
        du, dv = flow_2d[i]
        for r in (r0, r0 + 1):
            for c in (c0, c0 + 1):
                if written[r, c] and (
                    abs(grid[r, c, 0] - du) > 1e-9 or abs(grid[r, c, 1] - dv) > 1e-9
                ):
                    raise ValueError(
                        f"conflicting flows at cell ({r}, {c}); "
                        "points project too close for an exact field"
                    )
                grid[r, c, 0] = du
                grid[r, c, 1] = dv
                written[r, c] = True

    if not written.all():
        owner_row, owner_col = nearest_written_cells(written)
        miss = ~written
        grid[miss] = grid[owner_row[miss], owner_col[miss]]
    return FlowField2D(grid)


def nearest_written_cells(written: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per cell, the nearest written cell by Euclidean distance, ties to the
    smallest (row, col).

    Exact separable two-pass transform: a horizontal scan per row (ties to
    the left), then a vertical argmin per column (first occurrence, so the
    smaller row wins). All distances are small integers, so the arithmetic
    is exact and the result matches a brute-force scan bit for bit.
    """
    h, w = written.shape
    if not written.any():
        raise ValueError("nothing written to fill from")
    none = 1e9  # sentinel column, squares to something beyond any real distance

    cols = np.arange(w, dtype=np.float64)
    left = np.empty((h, w))
    run = np.full(h, -none)
    for c in range(w):
        run = np.where(written[:, c], cols[c], run)
        left[:, c] = run
    right = np.empty((h, w))
    run = np.full(h, none)
    for c in range(w - 1, -1, -1):
        run = np.where(written[:, c], cols[c], run)
        right[:, c] = run
    dist_left = cols[None, :] - left
    dist_right = right - cols[None, :]
    use_left = dist_left <= dist_right  # tie: the smaller column
    owner_col_by_row = np.where(use_left, left, right)
    hdist = np.where(use_left, dist_left, dist_right)

    rows = np.arange(h, dtype=np.float64)
    vert_sq = (rows[:, None] - rows[None, :]) ** 2  # (row, source row)
    owner_row = np.empty((h, w), dtype=np.int64)
    owner_col = np.empty((h, w), dtype=np.int64)
    for s in range(0, w, 64):
        hd = hdist[:, s : s + 64]
        total = vert_sq[:, :, None] + (hd * hd)[None, :, :]
        best = np.argmin(total, axis=1)  # first occurrence: the smaller row
        owner_row[:, s : s + 64] = best
        owner_col[:, s : s + 64] = np.take_along_axis(
            owner_col_by_row[:, s : s + 64], best, axis=0
        ).astype(np.int64)
    return owner_row, owner_col


def _unit_directions(rng: np.random.Generator, n: int, dims: int) -> np.ndarray:
    vec = rng.normal(size=(n, dims))
    norms = np.sqrt((vec * vec).sum(axis=1, keepdims=True))
    norms[norms == 0.0] = 1.0
    return vec / norms


def corrupt_labels(
    labels: PseudoLabelSet,
    fraction: float,
    magnitude: float,
    seed: int = 0,
) -> tuple[PseudoLabelSet, np.ndarray]:
    """Displace a seeded fraction of labels by ``magnitude`` in random directions.

    Both the flow and the stored 3D correspondence shift by the same offset,
    preserving the label identity. Returns the corrupted copy and the sorted
    indices of the corrupted entries (round(fraction * N) of them).
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    n = len(labels)
    n_sel = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    mask = np.sort(rng.choice(n, size=n_sel, replace=False)) if n_sel else np.empty(0, dtype=np.int64)
    flow = labels.flow.copy()
    corr3d = labels.corr3d.copy()
    if n_sel:
        offsets = magnitude * _unit_directions(rng, n_sel, 3)
        flow[mask] += offsets
        corr3d[mask] += offsets
    corrupted = PseudoLabelSet(
        flow=flow,
        corr3d=corr3d,
        corr2d=labels.corr2d.copy(),
        nn_2d_distance=labels.nn_2d_distance.copy(),
        nn_point_id=labels.nn_point_id.copy(),
        z_star=labels.z_star.copy(),
        valid=labels.valid.copy(),
    )
    return corrupted, mask.astype(np.int64)


def corrupt_flow_field(
    ff: FlowField2D,
    fraction: float,
    magnitude: float,
    seed: int = 0,
) -> tuple[FlowField2D, np.ndarray]:
    """Displace a seeded fraction of flow cells; returns the copy and a cell mask."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    cells = ff.height * ff.width
    n_sel = int(round(fraction * cells))
    rng = np.random.default_rng(seed)
    flat = ff.vectors.reshape(cells, 2).copy()
    mask = np.zeros(cells, dtype=bool)
    if n_sel:
        chosen = np.sort(rng.choice(cells, size=n_sel, replace=False))
        flat[chosen] += magnitude * _unit_directions(rng, n_sel, 2)
        mask[chosen] = True
    return FlowField2D(flat.reshape(ff.height, ff.width, 2)), mask.reshape(ff.height, ff.width)


DEFAULT_IMAGE_SIZE = (256, 192)
DEFAULT_FOCAL = 110.0


def default_camera(image_size: tuple = DEFAULT_IMAGE_SIZE) -> CameraModel:
    width, height = image_size
    return CameraModel.from_intrinsics(DEFAULT_FOCAL, DEFAULT_FOCAL, width / 2.0, height / 2.0)


def default_scene(
    seed: int = 0,
    image_size: tuple = DEFAULT_IMAGE_SIZE,
    grid_n: int | None = None,
) -> SceneSpec:
    """A randomized single-box scene safe for exact flow rendering.

    Projected grid spacing stays above ~4.5 px and every projection (before
    and after motion) keeps a margin inside the image, so
    render_exact_flow_field cannot conflict or clip.
    """
    rng = np.random.default_rng(seed)
    width, height = image_size
    cam = default_camera(image_size)

    depth = rng.uniform(4.0, 6.5)
    spacing_px = rng.uniform(4.5, 6.5)
    n = int(grid_n if grid_n is not None else rng.integers(12, 17))
    spacing_3d = spacing_px * depth / DEFAULT_FOCAL
    extent = spacing_3d * (n - 1)

    # image-space clearance: half the face (inflated for up to 8 deg of
    # in-plane rotation), the largest motion, perspective drift, a pad
    margin_px = spacing_px * (n - 1) / 2.0 * 1.18 + 26.0
    max_cx = (width / 2.0 - margin_px) * depth / DEFAULT_FOCAL
    max_cy = (height / 2.0 - margin_px) * depth / DEFAULT_FOCAL
    if max_cx <= 0 or max_cy <= 0:
        raise ValueError("image too small for the requested grid")
    center = (
        rng.uniform(-max_cx, max_cx),
        rng.uniform(-max_cy, max_cy),
        depth,
    )

    direction = _unit_directions(rng, 1, 2)[0]
    mag = rng.uniform(0.15, 0.35)
    translation = (
        mag * direction[0],
        mag * direction[1],
        rng.uniform(-0.1, 0.1),
    )
    obj = ObjectSpec(
        shape="box",
        center=center,
        size=(extent, extent),
        grid=(n, n),
        rotation_axis=(0.0, 0.0, 1.0),
        rotation_deg=rng.uniform(-8.0, 8.0),
        translation=translation,
    )
    return SceneSpec(objects=[obj], camera=cam, image_size=image_size, seed=seed)
