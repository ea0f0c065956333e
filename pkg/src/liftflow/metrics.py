"""Standard 3D scene-flow error metrics.

Per point: e = |pred - gt|_2 and rel = e / |gt|_2. When the ground-truth
flow is zero, rel is 0 for an exact prediction and +inf otherwise, so only
the absolute branch can admit such a point into the accuracy counts.
Comparisons follow the usual conventions literally: strict < for the
accuracies, strict > for the outliers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .flow_fit import _flows_array


@dataclass
class MetricsReport:
    epe3d: float
    acc3ds: float
    acc3dr: float
    outliers: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            "epe3d": self.epe3d,
            "acc3ds": self.acc3ds,
            "acc3dr": self.acc3dr,
            "outliers": self.outliers,
            "n_points": self.n_points,
        }

    def to_text(self) -> str:
        """Flat key-value block, one metric per line."""
        return (
            f"epe3d {self.epe3d:.6f}\n"
            f"acc3ds {self.acc3ds:.6f}\n"
            f"acc3dr {self.acc3dr:.6f}\n"
            f"outliers {self.outliers:.6f}\n"
            f"n_points {self.n_points}\n"
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate(pred, gt) -> MetricsReport:
    """Compare predicted against ground-truth flows.

    epe3d     mean Euclidean error in meters
    acc3ds    ratio with error < 0.05 m or relative error < 5%
    acc3dr    ratio with error < 0.10 m or relative error < 10%
    outliers  ratio with error > 0.30 m or relative error > 10%
    """
    p = _flows_array(pred)
    g = _flows_array(gt)
    if p.shape != g.shape:
        raise ValueError(f"prediction shape {p.shape} does not match ground truth {g.shape}")
    if p.shape[0] == 0:
        raise ValueError("cannot evaluate empty flow sets")

    diff = p - g
    err = np.sqrt((diff * diff).sum(axis=1))
    gnorm = np.sqrt((g * g).sum(axis=1))
    nonzero = gnorm > 0.0
    rel = np.where(
        nonzero,
        err / np.where(nonzero, gnorm, 1.0),
        np.where(err == 0.0, 0.0, np.inf),
    )

    return MetricsReport(
        epe3d=float(err.mean()),
        acc3ds=float(((err < 0.05) | (rel < 0.05)).mean()),
        acc3dr=float(((err < 0.10) | (rel < 0.10)).mean()),
        outliers=float(((err > 0.30) | (rel > 0.10)).mean()),
        n_points=int(p.shape[0]),
    )
