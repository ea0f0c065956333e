import numpy as np
import pytest

from liftflow import CameraModel


@pytest.fixture
def identity_cam():
    return CameraModel(np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0]]))


@pytest.fixture
def intrinsics_cam():
    # the hand-checked example camera: f=100, principal point (50, 50)
    return CameraModel(np.array([[100.0, 0, 50, 0], [0, 100.0, 50, 0], [0, 0, 1.0, 0]]))


def random_camera(rng):
    """A random well-conditioned camera: intrinsics times a small rigid motion."""
    fx, fy = rng.uniform(80, 400, size=2)
    cx, cy = rng.uniform(50, 300, size=2)
    k = np.array([[fx, 0, cx], [0, fy, cy], [0, 0, 1.0]])
    angle = rng.uniform(-0.2, 0.2)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1 - c
    rot = np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )
    t = rng.uniform(-0.5, 0.5, size=3)
    return CameraModel(np.hstack([k @ rot, (k @ t)[:, None]]))
