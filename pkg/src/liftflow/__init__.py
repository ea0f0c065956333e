"""Pseudo 3D scene-flow labels from camera geometry and a 2D flow field.

Pipeline: project the first cloud to the image plane, follow the precomputed
2D flow to a correspondence, borrow the depth of the nearest projected point
of the second cloud to lift it back to 3D, and take the displacement as a
per-point flow label. Labels are then confidence-scored, optionally refined
over spatial neighborhoods, fitted by a confidence-weighted optimizer, and
evaluated with the standard scene-flow metrics.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .flow_field import FlowField2D, displace, sample_flow, sample_flow_many
from .flow_fit import (
    FitConfig,
    FlowEstimate,
    LossReport,
    chamfer_loss,
    fit_flow,
    laplacian_smoothness,
    loss_gradient,
    smoothed_l1_loss,
    weighted_l1_loss,
)
from .geometry import (
    DEPTH_EPSILON,
    CameraModel,
    ImagePoint,
    PointCloud,
    ProjectedPoints,
    lift_points,
    lift_to_3d,
    project_cloud,
    project_point,
)
from .io_formats import (
    FormatError,
    LabelFile,
    MagicError,
    NonFiniteError,
    PreprocessConfig,
    TruncationError,
    labels_from_file,
    preprocess,
    read_calibration,
    read_flow_field,
    read_labels,
    read_point_cloud,
    write_calibration,
    write_flow_field,
    write_labels,
    write_point_cloud,
)
from .label_gen import PseudoLabelSet, generate_pseudo_labels
from .metrics import MetricsReport, evaluate
from .noise_model import (
    ConfidenceVector,
    NoiseParams,
    confidence_kernel,
    initial_confidence,
    refine_confidence,
    score_labels,
)
from .spatial_index import (
    PlanarIndex,
    VolumeIndex,
    brute_force_knn,
    brute_force_nearest,
    build_planar,
    build_volume,
    knn_volume,
    knn_volume_self,
    nearest_planar,
    nearest_planar_many,
)
from .synth import (
    ObjectSpec,
    RigidScene,
    SceneSpec,
    corrupt_flow_field,
    corrupt_labels,
    default_camera,
    default_scene,
    make_resampled_scene,
    make_rigid_scene,
    render_exact_flow_field,
    rotation_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "DEPTH_EPSILON",
    "CameraModel",
    "ImagePoint",
    "PointCloud",
    "ProjectedPoints",
    "project_point",
    "project_cloud",
    "lift_to_3d",
    "lift_points",
    "FlowField2D",
    "sample_flow",
    "sample_flow_many",
    "displace",
    "PlanarIndex",
    "VolumeIndex",
    "build_planar",
    "build_volume",
    "nearest_planar",
    "nearest_planar_many",
    "knn_volume",
    "knn_volume_self",
    "brute_force_nearest",
    "brute_force_knn",
    "PseudoLabelSet",
    "generate_pseudo_labels",
    "NoiseParams",
    "ConfidenceVector",
    "confidence_kernel",
    "initial_confidence",
    "refine_confidence",
    "score_labels",
    "FlowEstimate",
    "FitConfig",
    "LossReport",
    "weighted_l1_loss",
    "smoothed_l1_loss",
    "loss_gradient",
    "laplacian_smoothness",
    "chamfer_loss",
    "fit_flow",
    "MetricsReport",
    "evaluate",
    "FormatError",
    "MagicError",
    "TruncationError",
    "NonFiniteError",
    "LabelFile",
    "PreprocessConfig",
    "read_point_cloud",
    "write_point_cloud",
    "read_calibration",
    "write_calibration",
    "read_flow_field",
    "write_flow_field",
    "read_labels",
    "write_labels",
    "labels_from_file",
    "preprocess",
    "ObjectSpec",
    "SceneSpec",
    "RigidScene",
    "rotation_matrix",
    "make_rigid_scene",
    "make_resampled_scene",
    "render_exact_flow_field",
    "corrupt_labels",
    "corrupt_flow_field",
    "default_camera",
    "default_scene",
]
