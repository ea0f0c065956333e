import numpy as np
import pytest

from liftflow import (
    FlowField2D,
    NoiseParams,
    PointCloud,
    confidence_kernel,
    corrupt_labels,
    default_scene,
    generate_pseudo_labels,
    initial_confidence,
    make_rigid_scene,
    refine_confidence,
    render_exact_flow_field,
    score_labels,
)


def test_kernel_matches_published_values():
    assert confidence_kernel(1.9, theta=2.0) == 1.0
    assert confidence_kernel(4.0, theta=2.0) == 0.25
    # the boundary falls on the 1/d branch: jump from 1 to 0.5
    assert confidence_kernel(2.0, theta=2.0) == 0.5


def test_kernel_properties():
    assert confidence_kernel(0.0) == 1.0
    d = np.linspace(2.0, 50.0, 200)
    w = confidence_kernel(d)
    assert (np.diff(w) <= 0).all()
    assert (w > 0).all() and (w <= 1).all()


def _exact_labels(seed=6):
    spec = default_scene(seed=seed)
    scene = make_rigid_scene(spec)
    ff = render_exact_flow_field(scene.cloud_t, scene.gt_flow, spec.camera, spec.image_size)
    labels = generate_pseudo_labels(scene.cloud_t, scene.cloud_t1, spec.camera, ff)
    return scene, spec.camera, labels


def test_exact_scene_scores_one_everywhere():
    scene, cam, labels = _exact_labels()
    w = initial_confidence(labels, scene.cloud_t1, cam)
    assert (w == 1.0).all()


def test_far_correspondence_scores_inverse_distance(identity_cam):
    # single second-cloud point projecting at (0, 0); push the label's
    # correspondence 5 image units away at the same depth
    cloud_t = PointCloud([[0.0, 0.0, 1.0]])
    cloud_t1 = PointCloud([[0.0, 0.0, 1.0]])
    ff = FlowField2D.constant(3, 3)
    labels = generate_pseudo_labels(cloud_t, cloud_t1, identity_cam, ff)
    labels.corr3d[0] = [5.0, 0.0, 1.0]  # projects to (5, 0)
    w = initial_confidence(labels, cloud_t1, identity_cam)
    assert w[0] == pytest.approx(0.2, abs=1e-12)


def test_all_invalid_labels_score_zero(identity_cam):
    cloud_t = PointCloud([[0.0, 0.0, -1.0], [0.0, 0.0, -2.0]])
    cloud_t1 = PointCloud([[0.0, 0.0, 1.0]])
    ff = FlowField2D.constant(3, 3)
    labels = generate_pseudo_labels(cloud_t, cloud_t1, identity_cam, ff)
    assert not labels.valid.any()
    w = initial_confidence(labels, cloud_t1, identity_cam)
    assert (w == 0.0).all()


def test_initial_confidence_consistent_with_stored_distance():
    scene, cam, labels = _exact_labels(seed=9)
    w = initial_confidence(labels, scene.cloud_t1, cam)
    expected = confidence_kernel(labels.nn_2d_distance)
    assert np.abs(w - expected).max() < 1e-9


def _colinear_labels(flows):
    n = len(flows)
    pts = np.column_stack([np.arange(n, dtype=float), np.zeros(n), np.zeros(n)])
    cloud = PointCloud(pts)
    from liftflow import PseudoLabelSet

    labels = PseudoLabelSet(
        flow=np.asarray(flows, dtype=float),
        corr3d=pts + np.asarray(flows, dtype=float),
        corr2d=np.zeros((n, 2)),
        nn_2d_distance=np.zeros(n),
        nn_point_id=np.zeros(n, dtype=np.int64),
        z_star=np.ones(n),
        valid=np.ones(n, dtype=bool),
    )
    return cloud, labels


def test_refine_worked_example():
    # K=2 neighbors with weights 0.4 and 0.2, identical labels (affinity 1):
    # 0.25*0.8 + 0.75*(0.4 + 0.2)/2 = 0.425
    cloud, labels = _colinear_labels(np.tile([0.3, 0.0, 0.0], (3, 1)))
    w = np.array([0.8, 0.4, 0.2])
    params = NoiseParams(lam=0.25, k_neighbors=2)
    refined = refine_confidence(labels, cloud, w, params)
    assert refined[0] == pytest.approx(0.425, abs=1e-12)


def test_affinity_temperature():
    # neighbor labels differ by exactly tau: affinity e^-1
    cloud, labels = _colinear_labels([[0.0, 0, 0], [0.1, 0, 0]])
    w = np.array([1.0, 1.0])
    params = NoiseParams(lam=0.0, tau=0.1, k_neighbors=1)
    refined = refine_confidence(labels, cloud, w, params)
    assert refined[0] == pytest.approx(np.exp(-1.0), abs=1e-12)


def test_affinity_symmetric_and_one_iff_equal():
    # two points, each the other's only neighbor; with lam=0 the refined
    # weight of each is exactly the other's weight times the affinity, so
    # equal refined weights expose the affinity's symmetry
    cloud, labels = _colinear_labels([[0.0, 0, 0], [0.07, -0.02, 0.01]])
    params = NoiseParams(lam=0.0, k_neighbors=1)
    refined = refine_confidence(labels, cloud, np.ones(2), params)
    assert refined[0] == pytest.approx(refined[1], abs=1e-15)
    assert refined[0] < 1.0  # differing labels: affinity strictly below 1
    same_cloud, same_labels = _colinear_labels(np.tile([0.3, 0.1, 0.0], (2, 1)))
    refined_same = refine_confidence(same_labels, same_cloud, np.ones(2), params)
    assert np.array_equal(refined_same, [1.0, 1.0])  # identical labels: affinity 1


def test_lambda_one_disables_refinement():
    scene, cam, labels = _exact_labels(seed=10)
    w = initial_confidence(labels, scene.cloud_t1, cam)
    refined = refine_confidence(labels, scene.cloud_t, w, NoiseParams(lam=1.0))
    assert np.array_equal(refined, w)


def test_zero_weight_points_stay_zero():
    cloud, labels = _colinear_labels(np.zeros((4, 3)))
    w = np.array([0.0, 1.0, 1.0, 1.0])
    refined = refine_confidence(labels, cloud, w, NoiseParams(k_neighbors=2))
    assert refined[0] == 0.0
    assert (refined[1:] > 0).all()


def test_refinement_bounds():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(3, 30))
        cloud = PointCloud(rng.normal(size=(n, 3)))
        from liftflow import PseudoLabelSet

        flows = rng.normal(scale=0.3, size=(n, 3))
        labels = PseudoLabelSet(
            flow=flows,
            corr3d=cloud.points + flows,
            corr2d=np.zeros((n, 2)),
            nn_2d_distance=np.zeros(n),
            nn_point_id=np.zeros(n, dtype=np.int64),
            z_star=np.ones(n),
            valid=np.ones(n, dtype=bool),
        )
        w = rng.uniform(0.05, 1.0, size=n)
        params = NoiseParams(lam=float(rng.uniform(0.1, 0.9)))
        refined = refine_confidence(labels, cloud, w, params)
        assert (refined <= 1.0 + 1e-12).all()
        assert (refined >= params.lam * w.min() - 1e-12).all()


def test_confident_identical_neighborhood_never_punished():
    cloud, labels = _colinear_labels(np.tile([0.2, -0.1, 0.0], (6, 1)))
    w = np.full(6, 0.7)
    w[0] = 0.5
    params = NoiseParams(lam=0.25, k_neighbors=3)
    refined = refine_confidence(labels, cloud, w, params)
    # neighbors have weight 0.7 and identical labels: 0.25*0.5 + 0.75*0.7
    assert refined[0] == pytest.approx(0.25 * 0.5 + 0.75 * 0.7, abs=1e-12)
    all_one = refine_confidence(labels, cloud, np.ones(6), params)
    assert (all_one >= 1.0 - 1e-12).all()


def test_noise_separation_on_corrupted_scene():
    spec = default_scene(seed=7, grid_n=16)
    scene = make_rigid_scene(spec)
    ff = render_exact_flow_field(scene.cloud_t, scene.gt_flow, spec.camera, spec.image_size)
    labels = generate_pseudo_labels(scene.cloud_t, scene.cloud_t1, spec.camera, ff)
    corrupted, mask = corrupt_labels(labels, 0.2, 0.5, seed=11)
    conf = score_labels(corrupted, scene.cloud_t, scene.cloud_t1, spec.camera)
    clean = np.setdiff1d(np.arange(len(labels)), mask)
    assert conf.refined[mask].mean() < conf.refined[clean].mean()


def test_length_mismatch_and_tiny_cloud_errors():
    cloud, labels = _colinear_labels(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        refine_confidence(labels, cloud, np.ones(2))
    single_cloud, single_labels = _colinear_labels(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        refine_confidence(single_labels, single_cloud, np.ones(1))


def test_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(theta=0.0)
    with pytest.raises(ValueError):
        NoiseParams(lam=1.5)
    with pytest.raises(ValueError):
        NoiseParams(tau=-0.1)
    with pytest.raises(ValueError):
        NoiseParams(k_neighbors=0)
