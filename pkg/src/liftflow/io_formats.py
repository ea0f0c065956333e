"""On-disk formats and the dataset preprocessing rules.

All binary layouts are little-endian and round-trip bit-exactly:

  point cloud   magic "PCF1", count u32, then count * 3 float32 (X Y Z)
                (text fallback "X Y Z" per line for .txt / .xyz paths)
  calibration   text, exactly 12 decimals, the 3x4 matrix row-major
  flow field    float32 magic 202021.25, width i32, height i32, then
                height * width interleaved (du, dv) float32, row-major
  labels        magic "PSL1", count u32, then per point 3 float32 flow,
                float32 refined weight, u8 valid flag

Readers reject malformed input with distinct error kinds: MagicError,
TruncationError, NonFiniteError (all FormatError, a ValueError).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CameraModel, PointCloud, project_cloud
from .label_gen import PseudoLabelSet
from .flow_field import FlowField2D

PCF_MAGIC = b"PCF1"
LABELS_MAGIC = b"PSL1"
FLOW_MAGIC = 202021.25

TEXT_SUFFIXES = {".txt", ".xyz"}

_LABEL_DTYPE = np.dtype([("flow", "<f4", (3,)), ("weight", "<f4"), ("valid", "u1")])


class FormatError(ValueError):
    """Malformed file content."""


class MagicError(FormatError):
    """Wrong or missing magic bytes."""


class TruncationError(FormatError):
    """Payload shorter than the header promises."""


class NonFiniteError(FormatError):
    """NaN or infinity where finite values are required."""


def _is_text_path(path: Path) -> bool:
    return path.suffix.lower() in TEXT_SUFFIXES


def _check_magic(data: bytes, magic: bytes, path: Path) -> None:
    if len(data) < len(magic):
        raise TruncationError(f"{path}: file too short for the magic bytes")
    if data[: len(magic)] != magic:
        raise MagicError(f"{path}: bad magic {data[:len(magic)]!r}, expected {magic!r}")


def write_point_cloud(path, pc: PointCloud) -> None:
    """Binary PCF by default; plain text for .txt / .xyz paths."""
    path = Path(path)
    if _is_text_path(path):
        # repr of a Python float is the shortest exact decimal
        lines = [f"{float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in pc.points]
        path.write_text("\n".join(lines) + "\n")
        return
    payload = np.ascontiguousarray(pc.points, dtype="<f4")
    with open(path, "wb") as f:
        f.write(PCF_MAGIC)
        f.write(struct.pack("<I", len(pc)))
        f.write(payload.tobytes())


def read_point_cloud(path, frame_id: str = "") -> PointCloud:
    path = Path(path)
    if _is_text_path(path):
        return _read_point_cloud_text(path, frame_id)
    data = path.read_bytes()
    _check_magic(data, PCF_MAGIC, path)
    if len(data) < 8:
        raise TruncationError(f"{path}: missing point count")
    (count,) = struct.unpack("<I", data[4:8])
    expected = 8 + count * 12
    if len(data) < expected:
        raise TruncationError(
            f"{path}: payload holds {(len(data) - 8) // 12} points, header says {count}"
        )
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
    pts = np.frombuffer(data, dtype="<f4", count=count * 3, offset=8).reshape(count, 3)
    if not np.isfinite(pts).all():
        raise NonFiniteError(f"{path}: non-finite coordinates")
    return PointCloud(pts.astype(np.float64), frame_id=frame_id)


def _read_point_cloud_text(path: Path, frame_id: str) -> PointCloud:
    rows = []
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{ln}: expected 3 values per line, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"{path}:{ln}: non-numeric token") from exc
    if not rows:
        raise FormatError(f"{path}: no points")
    pts = np.array(rows, dtype=np.float64)
    if not np.isfinite(pts).all():
        raise NonFiniteError(f"{path}: non-finite coordinates")
    return PointCloud(pts, frame_id=frame_id)


def write_calibration(path, cam: CameraModel) -> None:
    rows = [" ".join(f"{float(v)!r}" for v in row) for row in cam.matrix]
    Path(path).write_text("\n".join(rows) + "\n")


def read_calibration(path) -> CameraModel:
    """Text file of exactly 12 numbers: the 3x4 matrix, row-major."""
    path = Path(path)
    tokens = path.read_text().split()
    if len(tokens) != 12:
        raise FormatError(f"{path}: expected 12 numbers, got {len(tokens)}")
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric token") from exc
    matrix = np.array(values, dtype=np.float64).reshape(3, 4)
    try:
        return CameraModel(matrix)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_flow_field(path, ff: FlowField2D) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<f", FLOW_MAGIC))
        f.write(struct.pack("<ii", ff.width, ff.height))
        f.write(np.ascontiguousarray(ff.vectors, dtype="<f4").tobytes())


def read_flow_field(path) -> FlowField2D:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4:
        raise TruncationError(f"{path}: file too short for the magic value")
    (magic,) = struct.unpack("<f", data[:4])
    if magic != np.float32(FLOW_MAGIC):
        raise MagicError(f"{path}: bad flow magic {magic!r}")
    if len(data) < 12:
        raise TruncationError(f"{path}: missing dimensions")
    width, height = struct.unpack("<ii", data[4:12])
    if width < 2 or height < 2:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    expected = 12 + height * width * 8
    if len(data) < expected:
        raise TruncationError(
            f"{path}: payload holds {(len(data) - 12) // 8} vectors, "
            f"header says {height * width}"
        )
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
    vec = np.frombuffer(data, dtype="<f4", count=height * width * 2, offset=12)
    vec = vec.reshape(height, width, 2)
    if not np.isfinite(vec).all():
        raise NonFiniteError(f"{path}: non-finite flow vectors")
    return FlowField2D(vec.astype(np.float64))


@dataclass(eq=False)
class LabelFile:
    """What the labels format stores: flow, refined weight, validity."""

    flow: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,)
    valid: np.ndarray  # (N,) bool

    def __len__(self) -> int:
        return self.flow.shape[0]


def write_labels(path, labels: PseudoLabelSet, confidence) -> None:
    """Store flows, refined confidences, and validity flags.

    ``confidence`` may be a ConfidenceVector (its refined weights are taken)
    or a plain per-point weight array.
    """
    weights = np.asarray(getattr(confidence, "refined", confidence), dtype=np.float64)
    if weights.shape != (len(labels),):
        raise ValueError("confidence length does not match the labels")
    rec = np.empty(len(labels), dtype=_LABEL_DTYPE)
    rec["flow"] = labels.flow.astype("<f4")
    rec["weight"] = weights.astype("<f4")
    rec["valid"] = labels.valid.astype("u1")
    with open(path, "wb") as f:
        f.write(LABELS_MAGIC)
        f.write(struct.pack("<I", len(labels)))
        f.write(rec.tobytes())


def read_labels(path) -> LabelFile:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, LABELS_MAGIC, path)
    if len(data) < 8:
        raise TruncationError(f"{path}: missing label count")
    (count,) = struct.unpack("<I", data[4:8])
    expected = 8 + count * _LABEL_DTYPE.itemsize
    if len(data) < expected:
        raise TruncationError(
            f"{path}: payload holds {(len(data) - 8) // _LABEL_DTYPE.itemsize} labels, "
            f"header says {count}"
        )
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
    rec = np.frombuffer(data, dtype=_LABEL_DTYPE, count=count, offset=8)
    flow = rec["flow"].astype(np.float64)
    weights = rec["weight"].astype(np.float64)
    flags = rec["valid"]
    if not np.isfinite(flow).all() or not np.isfinite(weights).all():
        raise NonFiniteError(f"{path}: non-finite label data")
    if np.any(flags > 1):
        raise FormatError(f"{path}: valid flags must be 0 or 1")
    return LabelFile(flow=flow, weights=weights, valid=flags.astype(bool))


def labels_from_file(lf: LabelFile, cloud_t: PointCloud) -> PseudoLabelSet:
    """Rebuild a label set from stored flows and the matching first cloud.

    The 3D correspondence is points + flow (exact by the label identity);
    the 2D match metadata is not stored, so those fields read NaN / -1.
    """
    if len(lf) != len(cloud_t):
        raise ValueError("label file length does not match the cloud")
    n = len(lf)
    return PseudoLabelSet(
        flow=lf.flow.copy(),
        corr3d=cloud_t.points + lf.flow,
        corr2d=np.full((n, 2), np.nan),
        nn_2d_distance=np.full(n, np.nan),
        nn_point_id=np.full(n, -1, dtype=np.int64),
        z_star=np.full(n, np.nan),
        valid=lf.valid.copy(),
    )


@dataclass
class PreprocessConfig:
    """Dataset reduction rules: depth cutoff, ground removal, subsampling.

    Ground removal keeps points whose signed height coordinate
    (height_sign * points[:, height_axis]) is at or above ground_height;
    pass ground_height=None to disable. Default follows the camera-frame
    convention: axis 1, sign +1, threshold -1.4 m.
    """

    max_depth: float = 35.0
    ground_height: float | None = -1.4
    height_axis: int = 1
    height_sign: float = 1.0
    sample_n: int = 8192
    seed: int = 0

    def __post_init__(self):
        if not self.max_depth > 0:
            raise ValueError("max_depth must be positive")
        if self.sample_n < 1:
            raise ValueError("sample_n must be at least 1")
        if self.height_axis not in (0, 1, 2):
            raise ValueError("height_axis must be 0, 1, or 2")
        if self.height_sign not in (1.0, -1.0):
            raise ValueError("height_sign must be +1 or -1")


def preprocess(pc: PointCloud, cam: CameraModel, cfg: PreprocessConfig | None = None) -> PointCloud:
    """Depth cutoff, then ground removal, then seeded subsampling.

    The stage order is fixed and test-pinned. Sampling is uniform without
    replacement and preserves the original point order; when fewer points
    survive filtering than requested, all are kept and a warning reports the
    shortfall. Deterministic for a fixed seed.
    """
    cfg = cfg or PreprocessConfig()
    depth = project_cloud(pc, cam).depth
    keep = depth <= cfg.max_depth
    if cfg.ground_height is not None:
        height = cfg.height_sign * pc.points[:, cfg.height_axis]
        keep &= height >= cfg.ground_height
    survivors = np.flatnonzero(keep)
    if survivors.size == 0:
        raise ValueError("preprocess filtering removed every point")
    if survivors.size > cfg.sample_n:
        rng = np.random.default_rng(cfg.seed)
        chosen = rng.choice(survivors.size, size=cfg.sample_n, replace=False)
        survivors = survivors[np.sort(chosen)]
    elif survivors.size < cfg.sample_n:
        warnings.warn(
            f"preprocess: requested {cfg.sample_n} points but only "
            f"{survivors.size} survived filtering; keeping all",
            stacklevel=2,
        )
    return PointCloud(pc.points[survivors].copy(), frame_id=pc.frame_id)
