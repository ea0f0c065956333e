import numpy as np
import pytest

from liftflow import FlowEstimate, evaluate


def test_perfect_prediction():
    rng = np.random.default_rng(0)
    gt = rng.normal(size=(50, 3))
    r = evaluate(FlowEstimate(gt.copy()), FlowEstimate(gt))
    assert r.epe3d == 0.0
    assert r.acc3ds == 1.0
    assert r.acc3dr == 1.0
    assert r.outliers == 0.0
    assert r.n_points == 50


def test_hand_case_outlier_fires_on_relative_branch():
    # error 0.3 on |gt| = 1: not > 0.30 absolute, but rel 0.3 > 0.10
    gt = np.tile([1.0, 0, 0], (4, 1))
    pred = gt + [0.3, 0, 0]
    r = evaluate(pred, gt)
    assert r.epe3d == pytest.approx(0.3, abs=1e-12)
    assert r.acc3ds == 0.0
    assert r.acc3dr == 0.0
    assert r.outliers == 1.0


def test_hand_case_small_error_counts_everywhere():
    gt = np.tile([1.0, 0, 0], (3, 1))
    pred = gt + [0.04, 0, 0]
    r = evaluate(pred, gt)
    assert r.acc3ds == 1.0
    assert r.acc3dr == 1.0
    assert r.outliers == 0.0


def test_zero_ground_truth_conventions():
    gt = np.zeros((2, 3))
    pred = np.array([[0.0, 0, 0], [0.04, 0, 0]])
    r = evaluate(pred, gt)
    # exact point: rel 0; off point: rel inf (absolute branch still admits
    # it into the accuracies, the relative branch flags it as an outlier)
    assert r.acc3ds == 1.0
    assert r.outliers == 0.5


def test_strictness_at_thresholds():
    # differences sit on their own axis so they are exactly representable
    # and sqrt(d*d) reproduces the threshold value bit for bit
    gt = np.array([[1.0, 0, 0]])
    at_strict = evaluate(np.array([[1.0, 0.05, 0]]), gt)  # e = rel = 0.05
    assert at_strict.acc3ds == 0.0  # strict < on both branches
    assert at_strict.acc3dr == 1.0
    at_relaxed = evaluate(np.array([[1.0, 0.10, 0]]), gt)  # e = rel = 0.10
    assert at_relaxed.acc3dr == 0.0
    assert at_relaxed.outliers == 0.0  # strict > on both branches
    gt4 = np.array([[4.0, 0, 0]])
    at_outlier = evaluate(np.array([[4.0, 0.30, 0]]), gt4)  # e = 0.30, rel = 0.075
    assert at_outlier.outliers == 0.0  # strict >


def test_acc3ds_never_exceeds_acc3dr():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        gt = rng.normal(size=(n, 3)) * rng.uniform(0.01, 2.0)
        pred = gt + rng.normal(size=(n, 3)) * rng.uniform(0.0, 0.5)
        r = evaluate(pred, gt)
        assert r.acc3ds <= r.acc3dr + 1e-15
        assert 0.0 <= r.outliers <= 1.0


def test_translation_equivariance():
    rng = np.random.default_rng(2)
    gt = rng.normal(size=(30, 3))
    delta = np.array([0.2, -0.1, 0.05])
    r = evaluate(gt + delta, gt)
    assert r.epe3d == pytest.approx(np.linalg.norm(delta), rel=1e-12)


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    gt = rng.normal(size=(40, 3))
    pred = gt + rng.normal(scale=0.1, size=(40, 3))
    perm = rng.permutation(40)
    a = evaluate(pred, gt)
    b = evaluate(pred[perm], gt[perm])
    assert a.epe3d == pytest.approx(b.epe3d, rel=1e-12)  # mean reassociates
    assert (a.acc3ds, a.acc3dr, a.outliers) == (b.acc3ds, b.acc3dr, b.outliers)


def test_errors():
    with pytest.raises(ValueError):
        evaluate(np.zeros((2, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        evaluate(np.zeros((0, 3)), np.zeros((0, 3)))


def test_report_serialization():
    r = evaluate(np.zeros((2, 3)), np.zeros((2, 3)))
    text = r.to_text()
    assert "epe3d 0.000000" in text
    assert "n_points 2" in text
    assert r.to_dict()["acc3dr"] == 1.0
