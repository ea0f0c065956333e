"""Camera geometry: point clouds, the 3x4 projection model, and depth lifting.

Everything here is pure and operates on immutable inputs, so all functions
are safe to call from any number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Camera depths at or below this do not project (division blows up at the
# camera plane).
DEPTH_EPSILON = 1e-6

_MIN_DET = 1e-12


def as_points(points) -> np.ndarray:
    """Coerce to a validated (N, 3) float64 array."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) array of points, got shape {pts.shape}")
    if pts.shape[0] < 1:
        raise ValueError("point cloud must contain at least one point")
    if not np.isfinite(pts).all():
        raise ValueError("point coordinates must be finite")
    return pts


@dataclass(eq=False)
class PointCloud:
    """N x 3 positions in meters plus an opaque frame label."""

    points: np.ndarray
    frame_id: str = ""

    def __post_init__(self):
        self.points = as_points(self.points)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(eq=False)
class CameraModel:
    """3x4 projection matrix [A | b]; camera depth is the third row of A p + b.

    A (the left 3x3 block) must be invertible so image points can be lifted
    back to 3D.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 4):
            raise ValueError(f"camera matrix must be 3x4, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("camera matrix entries must be finite")
        if abs(np.linalg.det(m[:, :3])) <= _MIN_DET:
            raise ValueError("left 3x3 block of the camera matrix is singular")
        self.matrix = m
        self._linear_inv = np.linalg.inv(m[:, :3])

    @property
    def linear(self) -> np.ndarray:
        """The left 3x3 block."""
        return self.matrix[:, :3]

    @property
    def offset(self) -> np.ndarray:
        """The fourth column."""
        return self.matrix[:, 3]

    @property
    def linear_inv(self) -> np.ndarray:
        return self._linear_inv

    @classmethod
    def from_intrinsics(cls, fx: float, fy: float, cx: float, cy: float) -> "CameraModel":
        """Pinhole camera with no extrinsic rotation or translation."""
        m = np.array(
            [[fx, 0.0, cx, 0.0], [0.0, fy, cy, 0.0], [0.0, 0.0, 1.0, 0.0]],
            dtype=np.float64,
        )
        return cls(m)


@dataclass(frozen=True)
class ImagePoint:
    """A projected point: continuous image coordinates plus camera depth.

    ``valid`` is False when the source point sits at or behind the camera
    plane; invalid points carry (u, v) = (0, 0) and the raw camera depth.
    """

    u: float
    v: float
    cam_depth: float
    valid: bool


@dataclass(eq=False)
class ProjectedPoints:
    """Columnar projection result; indexes like a sequence of ImagePoint."""

    uv: np.ndarray  # (N, 2)
    depth: np.ndarray  # (N,)
    valid: np.ndarray  # (N,) bool

    def __len__(self) -> int:
        return self.depth.shape[0]

    def __getitem__(self, i: int) -> ImagePoint:
        return ImagePoint(
            float(self.uv[i, 0]),
            float(self.uv[i, 1]),
            float(self.depth[i]),
            bool(self.valid[i]),
        )


def project_point(p, cam: CameraModel, depth_epsilon: float = DEPTH_EPSILON) -> ImagePoint:
    """Project a single 3D point through [A | b] and divide by camera depth."""
    p = np.asarray(p, dtype=np.float64)
    m = cam.matrix
    # Keep the sum association identical to project_cloud so the scalar and
    # vectorized paths agree bit for bit.
    x = p[0] * m[0, 0] + p[1] * m[0, 1] + p[2] * m[0, 2] + m[0, 3]
    y = p[0] * m[1, 0] + p[1] * m[1, 1] + p[2] * m[1, 2] + m[1, 3]
    z = p[0] * m[2, 0] + p[1] * m[2, 1] + p[2] * m[2, 2] + m[2, 3]
    if z > depth_epsilon:
        return ImagePoint(float(x / z), float(y / z), float(z), True)
    return ImagePoint(0.0, 0.0, float(z), False)


def project_cloud(pc, cam: CameraModel, depth_epsilon: float = DEPTH_EPSILON) -> ProjectedPoints:
    """Project every point of a cloud; output order matches input order."""
    pts = pc.points if isinstance(pc, PointCloud) else as_points(pc)
    m = cam.matrix
    x = pts[:, 0] * m[0, 0] + pts[:, 1] * m[0, 1] + pts[:, 2] * m[0, 2] + m[0, 3]
    y = pts[:, 0] * m[1, 0] + pts[:, 1] * m[1, 1] + pts[:, 2] * m[1, 2] + m[1, 3]
    z = pts[:, 0] * m[2, 0] + pts[:, 1] * m[2, 1] + pts[:, 2] * m[2, 2] + m[2, 3]
    valid = z > depth_epsilon
    uv = np.zeros((pts.shape[0], 2), dtype=np.float64)
    np.divide(x, z, out=uv[:, 0], where=valid)
    np.divide(y, z, out=uv[:, 1], where=valid)
    return ProjectedPoints(uv=uv, depth=z, valid=valid)


def lift_to_3d(uv, z_star: float, cam: CameraModel) -> np.ndarray:
    """Invert the projection for a known camera depth.

    Solves A p + b = (u z*, v z*, z*), the unique preimage of (u, v) at
    camera depth z* > 0.
    """
    z = float(z_star)
    if not z > 0.0:
        raise ValueError(f"lifting needs a positive camera depth, got {z}")
    u, v = float(uv[0]), float(uv[1])
    b = cam.offset
    inv = cam.linear_inv
    rx = u * z - b[0]
    ry = v * z - b[1]
    rz = z - b[2]
    return np.array(
        [
            inv[0, 0] * rx + inv[0, 1] * ry + inv[0, 2] * rz,
            inv[1, 0] * rx + inv[1, 1] * ry + inv[1, 2] * rz,
            inv[2, 0] * rx + inv[2, 1] * ry + inv[2, 2] * rz,
        ]
    )


def lift_points(uv: np.ndarray, depths: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Vectorized lift_to_3d over (N, 2) coordinates and (N,) depths."""
    uv = np.asarray(uv, dtype=np.float64)
    z = np.asarray(depths, dtype=np.float64)
    if np.any(z <= 0.0):
        raise ValueError("lifting needs positive camera depths")
    b = cam.offset
    inv = cam.linear_inv
    rx = uv[:, 0] * z - b[0]
    ry = uv[:, 1] * z - b[1]
    rz = z - b[2]
    out = np.empty((uv.shape[0], 3), dtype=np.float64)
    out[:, 0] = inv[0, 0] * rx + inv[0, 1] * ry + inv[0, 2] * rz
    out[:, 1] = inv[1, 0] * rx + inv[1, 1] * ry + inv[1, 2] * rz
    out[:, 2] = inv[2, 0] * rx + inv[2, 1] * ry + inv[2, 2] * rz
    return out
