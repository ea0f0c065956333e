"""Dense 2D flow grids sampled bilinearly at continuous image coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class FlowField2D:
    """H x W grid of (du, dv) motion vectors, row-major, image units.

    Immutable after construction; sampling is pure and concurrency-safe.
    """

    vectors: np.ndarray  # (H, W, 2) float64

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vec.ndim != 3 or vec.shape[2] != 2:
            raise ValueError(f"flow field must be (H, W, 2), got shape {vec.shape}")
        if vec.shape[0] < 2 or vec.shape[1] < 2:
            raise ValueError("flow field needs at least a 2x2 grid for bilinear sampling")
        if not np.isfinite(vec).all():
            raise ValueError("flow vectors must be finite")
        self.vectors = vec

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def constant(cls, width: int, height: int, du: float = 0.0, dv: float = 0.0) -> "FlowField2D":
        vec = np.empty((height, width, 2), dtype=np.float64)
        vec[..., 0] = du
        vec[..., 1] = dv
        return cls(vec)


def sample_flow_many(ff: FlowField2D, uv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear samples at (N, 2) coordinates.

    Returns (flows, in_bounds). Coordinates outside
    [0, width-1] x [0, height-1] (and non-finite ones) are flagged False and
    get a zero flow.
    """
    uv = np.asarray(uv, dtype=np.float64)
    u = uv[:, 0]
    v = uv[:, 1]
    w = ff.width
    h = ff.height
    in_bounds = (u >= 0.0) & (u <= w - 1.0) & (v >= 0.0) & (v <= h - 1.0)

    uc = np.where(in_bounds, u, 0.0)
    vc = np.where(in_bounds, v, 0.0)
    x0 = np.minimum(np.floor(uc), w - 2).astype(np.int64)
    y0 = np.minimum(np.floor(vc), h - 2).astype(np.int64)
    fx = (uc - x0)[:, None]
    fy = (vc - y0)[:, None]

    grid = ff.vectors
    out = (
        (1.0 - fx) * (1.0 - fy) * grid[y0, x0]
        + fx * (1.0 - fy) * grid[y0, x0 + 1]
        + (1.0 - fx) * fy * grid[y0 + 1, x0]
        + fx * fy * grid[y0 + 1, x0 + 1]
    )
    out[~in_bounds] = 0.0
    return out, in_bounds


def sample_flow(ff: FlowField2D, at) -> tuple[float, float] | None:
    """Bilinear sample at one coordinate; None marks out-of-bounds."""
    flows, ok = sample_flow_many(ff, np.asarray(at, dtype=np.float64).reshape(1, 2))
    if not ok[0]:
        return None
    return float(flows[0, 0]), float(flows[0, 1])


def displace(at, flow) -> tuple[float, float]:
    """The 2D correspondence: image position plus its flow vector."""
    return float(at[0]) + float(flow[0]), float(at[1]) + float(flow[1])
