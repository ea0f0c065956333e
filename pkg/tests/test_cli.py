import json

import numpy as np
import pytest

from liftflow import read_labels, read_point_cloud
from liftflow.cli import cli


def test_full_pipeline_round_trip(tmp_path, capsys):
    scene = tmp_path / "scene"
    assert cli(["synth", "--out-dir", str(scene), "--seed", "3"]) == 0
    labels = scene / "labels.psl"
    assert cli([
        "generate", str(scene / "cloud_t.pcf"), str(scene / "cloud_t1.pcf"),
        str(scene / "calib.txt"), str(scene / "flow.flo"), "-o", str(labels),
    ]) == 0
    scored = scene / "labels_scored.psl"
    assert cli([
        "confidence", str(labels), str(scene / "cloud_t.pcf"),
        str(scene / "cloud_t1.pcf"), str(scene / "calib.txt"), "-o", str(scored),
    ]) == 0
    pred = scene / "pred.pcf"
    assert cli([
        "fit", str(scored), str(scene / "cloud_t.pcf"), "-o", str(pred),
        "--iters", "200",
    ]) == 0
    assert cli(["eval", str(pred), str(scene / "gt_flow.pcf")]) == 0
    out = capsys.readouterr().out
    line = [ln for ln in out.splitlines() if ln.startswith("epe3d")][-1]
    assert float(line.split()[1]) < 0.01


def test_generate_matches_ground_truth(tmp_path):
    scene = tmp_path / "scene"
    cli(["synth", "--out-dir", str(scene), "--seed", "5"])
    labels = scene / "labels.psl"
    cli([
        "generate", str(scene / "cloud_t.pcf"), str(scene / "cloud_t1.pcf"),
        str(scene / "calib.txt"), str(scene / "flow.flo"), "-o", str(labels),
    ])
    lf = read_labels(labels)
    gt = read_point_cloud(scene / "gt_flow.pcf").points
    assert lf.valid.all()
    # flows are well below 1 m, so even after the float32 files the
    # quantization sits orders of magnitude under this bound
    assert np.abs(lf.flow - gt).max() < 1e-6


def test_eval_identical_files(tmp_path, capsys):
    scene = tmp_path / "scene"
    cli(["synth", "--out-dir", str(scene)])
    gt = str(scene / "gt_flow.pcf")
    assert cli(["eval", gt, gt]) == 0
    out = capsys.readouterr().out
    assert "epe3d 0.000000" in out
    assert "acc3ds 1.000000" in out


def test_eval_json_and_text_outputs(tmp_path):
    scene = tmp_path / "scene"
    cli(["synth", "--out-dir", str(scene)])
    gt = str(scene / "gt_flow.pcf")
    report_txt = tmp_path / "report.txt"
    report_json = tmp_path / "report.json"
    assert cli(["eval", gt, gt, "--out", str(report_txt), "--json", str(report_json)]) == 0
    assert "outliers 0.000000" in report_txt.read_text()
    data = json.loads(report_json.read_text())
    assert data["epe3d"] == 0.0 and data["n_points"] > 0


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.pcf"
    code = cli(["eval", str(missing), str(missing)])
    assert code == 1
    err = capsys.readouterr().err
    assert "nope.pcf" in err
    assert err.count("\n") == 1  # one-line diagnostic


def test_unknown_subcommand_usage(capsys):
    assert cli(["frobnicate"]) != 0
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag(capsys):
    assert cli(["synth", "--out-dir", "x", "--bogus"]) != 0


def test_preprocess_cli(tmp_path, capsys):
    import liftflow

    rng = np.random.default_rng(0)
    pts = np.column_stack(
        [rng.uniform(-3, 3, 500), rng.uniform(-3, 3, 500), rng.uniform(1, 60, 500)]
    )
    cloud_path = tmp_path / "in.pcf"
    calib_path = tmp_path / "calib.txt"
    liftflow.write_point_cloud(cloud_path, liftflow.PointCloud(pts))
    liftflow.write_calibration(calib_path, liftflow.CameraModel(np.eye(3, 4)))
    out_path = tmp_path / "out.pcf"
    code = cli([
        "preprocess", str(cloud_path), str(calib_path), "-o", str(out_path),
        "--max-depth", "35", "--sample-n", "100", "--seed", "1", "--no-ground-removal",
    ])
    assert code == 0
    out = read_point_cloud(out_path)
    assert len(out) == 100
    # deterministic rerun produces identical bytes
    out2_path = tmp_path / "out2.pcf"
    cli([
        "preprocess", str(cloud_path), str(calib_path), "-o", str(out2_path),
        "--max-depth", "35", "--sample-n", "100", "--seed", "1", "--no-ground-removal",
    ])
    assert out_path.read_bytes() == out2_path.read_bytes()


def test_fit_chamfer_needs_second_cloud(tmp_path, capsys):
    scene = tmp_path / "scene"
    cli(["synth", "--out-dir", str(scene)])
    labels = scene / "labels.psl"
    cli([
        "generate", str(scene / "cloud_t.pcf"), str(scene / "cloud_t1.pcf"),
        str(scene / "calib.txt"), str(scene / "flow.flo"), "-o", str(labels),
    ])
    code = cli([
        "fit", str(labels), str(scene / "cloud_t.pcf"), "-o", str(scene / "p.pcf"),
        "--mode", "chamfer",
    ])
    assert code == 1
    assert "second cloud" in capsys.readouterr().err


def test_synth_resampled_and_corrupted(tmp_path):
    scene = tmp_path / "scene"
    code = cli([
        "synth", "--out-dir", str(scene), "--resampled",
        "--corrupt-fraction", "0.1", "--seed", "2",
    ])
    assert code == 0
    t = read_point_cloud(scene / "cloud_t.pcf")
    t1 = read_point_cloud(scene / "cloud_t1.pcf")
    assert len(t1) != len(t)
