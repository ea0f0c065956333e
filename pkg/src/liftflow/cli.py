"""Command-line surface tying the pipeline together.

Typical round trip:

    liftflow synth --out-dir scene
    liftflow generate scene/cloud_t.pcf scene/cloud_t1.pcf scene/calib.txt \
        scene/flow.flo -o scene/labels.psl
    liftflow confidence scene/labels.psl scene/cloud_t.pcf scene/cloud_t1.pcf \
        scene/calib.txt -o scene/labels_scored.psl
    liftflow fit scene/labels_scored.psl scene/cloud_t.pcf -o scene/pred.pcf
    liftflow eval scene/pred.pcf scene/gt_flow.pcf
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io_formats as io
from .flow_fit import FitConfig, FlowEstimate, fit_flow
from .geometry import PointCloud
from .label_gen import generate_pseudo_labels
from .metrics import evaluate
from .noise_model import NoiseParams, score_labels
from .synth import (
    corrupt_flow_field,
    default_scene,
    make_resampled_scene,
    make_rigid_scene,
    render_exact_flow_field,
)


def _cmd_generate(args) -> int:
    cloud_t = io.read_point_cloud(args.cloud_t, frame_id="t")
    cloud_t1 = io.read_point_cloud(args.cloud_t1, frame_id="t+1")
    cam = io.read_calibration(args.calib)
    flow = io.read_flow_field(args.flow)
    labels = generate_pseudo_labels(cloud_t, cloud_t1, cam, flow)
    # neutral weights until the confidence stage runs
    weights = labels.valid.astype(np.float64)
    io.write_labels(args.out, labels, weights)
    print(f"wrote {args.out}: {int(labels.valid.sum())}/{len(labels)} valid labels")
    return 0


def _cmd_confidence(args) -> int:
    lf = io.read_labels(args.labels)
    cloud_t = io.read_point_cloud(args.cloud_t, frame_id="t")
    cloud_t1 = io.read_point_cloud(args.cloud_t1, frame_id="t+1")
    cam = io.read_calibration(args.calib)
    labels = io.labels_from_file(lf, cloud_t)
    params = NoiseParams(theta=args.theta, lam=args.lam, tau=args.tau, k_neighbors=args.k)
    conf = score_labels(labels, cloud_t, cloud_t1, cam, params)
    io.write_labels(args.out, labels, conf)
    print(
        f"wrote {args.out}: mean confidence "
        f"{conf.initial.mean():.4f} initial -> {conf.refined.mean():.4f} refined"
    )
    return 0


def _cmd_fit(args) -> int:
    lf = io.read_labels(args.labels)
    cloud_t = io.read_point_cloud(args.cloud_t, frame_id="t")
    labels = io.labels_from_file(lf, cloud_t)
    cloud_t1 = None
    if args.cloud_t1 is not None:
        cloud_t1 = io.read_point_cloud(args.cloud_t1, frame_id="t+1")
    cfg = FitConfig(
        learning_rate=args.lr,
        iterations=args.iters,
        smoothness_weight=args.beta,
        smoothness_k=args.smoothness_k,
        l1_epsilon=args.l1_epsilon,
        seed=args.seed,
    )
    estimate, report = fit_flow(labels, lf.weights, cloud_t, cfg, mode=args.mode, cloud_t1=cloud_t1)
    io.write_point_cloud(args.out, PointCloud(estimate.flows))
    print(
        f"wrote {args.out}: {args.mode} fit, final objective {report.trace[-1]:.6g}, "
        f"final data term {report.final_data:.6g}"
    )
    return 0


def _cmd_eval(args) -> int:
    pred = FlowEstimate(io.read_point_cloud(args.pred).points)
    gt = FlowEstimate(io.read_point_cloud(args.gt).points)
    report = evaluate(pred, gt)
    text = report.to_text()
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
    if args.json_out:
        Path(args.json_out).write_text(report.to_json() + "\n")
    return 0


def _cmd_preprocess(args) -> int:
    cloud = io.read_point_cloud(args.cloud)
    cam = io.read_calibration(args.calib)
    cfg = io.PreprocessConfig(
        max_depth=args.max_depth,
        ground_height=None if args.no_ground_removal else args.ground_height,
        height_axis=args.height_axis,
        sample_n=args.sample_n,
        seed=args.seed,
    )
    out = io.preprocess(cloud, cam, cfg)
    io.write_point_cloud(args.out, out)
    print(f"wrote {args.out}: {len(out)} of {len(cloud)} points kept")
    return 0


def _cmd_synth(args) -> int:
    spec = default_scene(seed=args.seed, image_size=(args.width, args.height), grid_n=args.grid)
    scene = make_resampled_scene(spec) if args.resampled else make_rigid_scene(spec)
    flow = render_exact_flow_field(scene.cloud_t, scene.gt_flow, spec.camera, spec.image_size)
    if args.corrupt_fraction > 0.0:
        flow, _ = corrupt_flow_field(flow, args.corrupt_fraction, args.corrupt_magnitude, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_point_cloud(out_dir / "cloud_t.pcf", scene.cloud_t)
    io.write_point_cloud(out_dir / "cloud_t1.pcf", scene.cloud_t1)
    io.write_calibration(out_dir / "calib.txt", spec.camera)
    io.write_flow_field(out_dir / "flow.flo", flow)
    io.write_point_cloud(out_dir / "gt_flow.pcf", PointCloud(scene.gt_flow))
    print(f"wrote scene ({len(scene.cloud_t)} points) to {out_dir}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftflow",
        description="pseudo scene-flow labels, confidence scoring, flow fitting, and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="labels from two clouds + calibration + 2D flow")
    g.add_argument("cloud_t", help="first point cloud (.pcf, or .txt/.xyz)")
    g.add_argument("cloud_t1", help="second point cloud")
    g.add_argument("calib", help="3x4 calibration text file")
    g.add_argument("flow", help="2D flow field (.flo)")
    g.add_argument("-o", "--out", required=True, help="output labels file (.psl)")
    g.set_defaults(func=_cmd_generate)

    c = sub.add_parser("confidence", help="score and refine label confidences")
    c.add_argument("labels", help="labels file from generate")
    c.add_argument("cloud_t", help="first point cloud (refinement neighborhoods)")
    c.add_argument("cloud_t1", help="second point cloud")
    c.add_argument("calib", help="3x4 calibration text file")
    c.add_argument("-o", "--out", required=True, help="output labels file with refined weights")
    c.add_argument("--theta", type=float, default=2.0, help="image-distance threshold")
    c.add_argument("--lambda", dest="lam", type=float, default=0.25, help="blend weight")
    c.add_argument("--tau", type=float, default=0.1, help="label-similarity temperature (m)")
    c.add_argument("--k", type=int, default=8, help="refinement neighborhood size")
    c.set_defaults(func=_cmd_confidence)

    f = sub.add_parser("fit", help="fit per-point flows to weighted labels")
    f.add_argument("labels", help="labels file with confidences")
    f.add_argument("cloud_t", help="first point cloud")
    f.add_argument("-o", "--out", required=True, help="output flows (.pcf)")
    f.add_argument("--mode", choices=["weighted", "unweighted", "chamfer"], default="weighted")
    f.add_argument("--lr", type=float, default=0.05, help="initial step size")
    f.add_argument("--iters", type=int, default=500)
    f.add_argument("--beta", type=float, default=0.1, help="smoothness weight")
    f.add_argument("--smoothness-k", type=int, default=8)
    f.add_argument("--l1-epsilon", type=float, default=1e-6)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--cloud-t1", default=None, help="second cloud (required for chamfer mode)")
    f.set_defaults(func=_cmd_fit)

    e = sub.add_parser("eval", help="scene-flow metrics of predicted vs ground-truth flows")
    e.add_argument("pred", help="predicted flows (.pcf)")
    e.add_argument("gt", help="ground-truth flows (.pcf)")
    e.add_argument("--out", default=None, help="also write the text report here")
    e.add_argument("--json", dest="json_out", default=None, help="also write a JSON report here")
    e.set_defaults(func=_cmd_eval)

    p = sub.add_parser("preprocess", help="depth cutoff, ground removal, subsampling")
    p.add_argument("cloud", help="input point cloud")
    p.add_argument("calib", help="3x4 calibration text file (for camera depths)")
    p.add_argument("-o", "--out", required=True, help="output point cloud")
    p.add_argument("--max-depth", type=float, default=35.0)
    p.add_argument("--ground-height", type=float, default=-1.4)
    p.add_argument("--no-ground-removal", action="store_true")
    p.add_argument("--height-axis", type=int, default=1, choices=[0, 1, 2])
    p.add_argument("--sample-n", type=int, default=8192)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_preprocess)

    s = sub.add_parser("synth", help="emit a synthetic scene with ground truth")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid", type=int, default=None, help="box grid samples per side")
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=192)
    s.add_argument("--resampled", action="store_true", help="no pointwise correspondences")
    s.add_argument("--corrupt-fraction", type=float, default=0.0, help="fraction of flow cells to corrupt")
    s.add_argument("--corrupt-magnitude", type=float, default=0.5)
    s.set_defaults(func=_cmd_synth)
    return parser


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
