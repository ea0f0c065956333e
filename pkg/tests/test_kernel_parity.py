"""The compiled core and the numpy fallback must agree exactly."""

import numpy as np
import pytest

from liftflow._kernels import BACKEND, _numpy

try:
    from liftflow._kernels import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled core not built")


@needs_core
def test_nearest_2d_parity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        pts = np.ascontiguousarray(rng.uniform(-50, 50, size=(int(rng.integers(1, 80)), 2)))
        q = np.ascontiguousarray(rng.uniform(-60, 60, size=(int(rng.integers(1, 30)), 2)))
        ci, cd = _core.nearest_2d(pts, q)
        ni, nd = _numpy.nearest_2d(pts, q)
        assert np.array_equal(ci, ni)
        assert np.array_equal(cd, nd)


@needs_core
def test_nearest_3d_sq_parity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        pts = np.ascontiguousarray(rng.normal(size=(int(rng.integers(1, 80)), 3)))
        q = np.ascontiguousarray(rng.normal(size=(int(rng.integers(1, 30)), 3)))
        ci, cd = _core.nearest_3d_sq(pts, q)
        ni, nd = _numpy.nearest_3d_sq(pts, q)
        assert np.array_equal(ci, ni)
        assert np.array_equal(cd, nd)


@needs_core
def test_knn_3d_parity():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        pts = np.ascontiguousarray(rng.normal(size=(n, 3)))
        k = int(rng.integers(1, 10))
        # plain queries
        q = np.ascontiguousarray(rng.normal(size=(int(rng.integers(1, 20)), 3)))
        none = np.full(q.shape[0], -1, dtype=np.int64)
        ci, cd = _core.knn_3d(pts, q, k, none)
        ni, nd = _numpy.knn_3d(pts, q, k, none)
        assert np.array_equal(ci, ni)
        assert np.array_equal(cd, nd)
        # self-excluded
        rows = np.arange(n, dtype=np.int64)
        ci, cd = _core.knn_3d(pts, pts, k, rows)
        ni, nd = _numpy.knn_3d(pts, pts, k, rows)
        assert np.array_equal(ci, ni)
        assert np.array_equal(cd, nd)


@needs_core
def test_knn_ties_by_id_both_backends():
    # symmetric integer layout: exact distance ties
    pts = np.ascontiguousarray(
        np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
    )
    q = np.zeros((1, 3))
    none = np.array([-1], dtype=np.int64)
    for impl in (_core, _numpy):
        ids, dists = impl.knn_3d(pts, q, 3, none)
        assert list(ids[0]) == [0, 1, 2]
        assert np.allclose(dists[0], 1.0)


def test_backend_reports_something():
    assert BACKEND in ("compiled", "numpy")
