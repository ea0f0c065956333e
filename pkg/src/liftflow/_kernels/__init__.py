"""Hot query kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when importable; set ``LIFTFLOW_PURE=1``
to force the fallback (used by the benchmark to compare the two).
Both backends implement the same contracts bit for bit.
"""

import os

from . import _numpy

if os.environ.get("LIFTFLOW_PURE"):
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _numpy
        BACKEND = "numpy"

nearest_2d = _impl.nearest_2d
nearest_3d_sq = _impl.nearest_3d_sq
knn_3d = _impl.knn_3d

__all__ = ["BACKEND", "nearest_2d", "nearest_3d_sq", "knn_3d"]
