#!/usr/bin/env python3
"""Compare the compiled kernel core against the numpy fallback.

Times the three hot query kernels on synthetic workloads and, when the
compiled core is available, an end-to-end label pipeline with each backend
swapped in. Run from the repository root:

    python3 benchmarks/bench_kernels.py [--points 4096] [--queries 4096]
"""

import argparse
import time

import numpy as np

from liftflow import _kernels
from liftflow._kernels import _numpy

try:
    from liftflow._kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_kernels(n_points, n_queries):
    rng = np.random.default_rng(0)
    pts2 = np.ascontiguousarray(rng.uniform(0, 500, size=(n_points, 2)))
    q2 = np.ascontiguousarray(rng.uniform(0, 500, size=(n_queries, 2)))
    pts3 = np.ascontiguousarray(rng.normal(size=(n_points, 3)))
    q3 = np.ascontiguousarray(rng.normal(size=(n_queries, 3)))
    rows = np.arange(n_points, dtype=np.int64)

    cases = [
        ("nearest_2d", lambda impl: impl.nearest_2d(pts2, q2)),
        ("nearest_3d_sq", lambda impl: impl.nearest_3d_sq(pts3, q3)),
        ("knn_3d (k=8, self)", lambda impl: impl.knn_3d(pts3, pts3, 8, rows)),
    ]
    print(f"\nkernels: {n_points} points, {n_queries} queries")
    print(f"{'kernel':<22} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, call in cases:
        t_np = best_of(lambda: call(_numpy))
        if _core is not None:
            t_c = best_of(lambda: call(_core))
            print(f"{name:<22} {t_np:>9.4f}s {t_c:>9.4f}s {t_np / t_c:>7.1f}x")
        else:
            print(f"{name:<22} {t_np:>9.4f}s {'-':>10} {'-':>8}")


def _pipeline(grid_n, iters):
    import liftflow as lf

    spec = lf.default_scene(seed=1, grid_n=grid_n)
    scene = lf.make_rigid_scene(spec)
    ff = lf.render_exact_flow_field(scene.cloud_t, scene.gt_flow, spec.camera, spec.image_size)
    labels = lf.generate_pseudo_labels(scene.cloud_t, scene.cloud_t1, spec.camera, ff)
    conf = lf.score_labels(labels, scene.cloud_t, scene.cloud_t1, spec.camera)
    cfg = lf.FitConfig(iterations=iters)
    lf.fit_flow(labels, conf.refined, scene.cloud_t, cfg, mode="weighted")
    lf.fit_flow(None, None, scene.cloud_t, cfg, mode="chamfer", cloud_t1=scene.cloud_t1)


def bench_pipeline(grid_n=16, iters=150):
    if _core is None:
        print("\npipeline comparison skipped: compiled core not built")
        return
    bindings = ["nearest_2d", "nearest_3d_sq", "knn_3d"]
    results = {}
    for label, impl in (("numpy", _numpy), ("compiled", _core)):
        for name in bindings:
            setattr(_kernels, name, getattr(impl, name))
        results[label] = best_of(lambda: _pipeline(grid_n, iters), repeats=2)
    # restore the default backend bindings
    for name in bindings:
        setattr(_kernels, name, getattr(_core, name))
    print(f"\nend-to-end scene pipeline ({grid_n}x{grid_n} grid, {iters} fit iters)")
    print(f"{'numpy':>10} {'compiled':>10} {'speedup':>8}")
    print(
        f"{results['numpy']:>9.3f}s {results['compiled']:>9.3f}s "
        f"{results['numpy'] / results['compiled']:>7.1f}x"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=4096)
    ap.add_argument("--queries", type=int, default=4096)
    args = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    bench_kernels(args.points, args.queries)
    bench_pipeline()


if __name__ == "__main__":
    main()
