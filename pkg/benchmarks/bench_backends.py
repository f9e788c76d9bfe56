#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot paths (rasterization, batched ray marching, the full
Monte-Carlo SSR gather) plus an end-to-end frame, on the mirror-room scene
with a 500-splat cloud. Usage: python benchmarks/bench_backends.py [--size N].
"""

import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from splatshade import RenderSettings, precompute_brdf_lut, rasterize, render_frame, shade_direct
from splatshade._kernels import available_backends
from splatshade.splat import depth_to_normal
from splatshade.ssr import integrate_indirect_specular, trace_screen_rays

from scenes import cloud_scene  # noqa: E402


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--splats", type=int, default=500)
    ap.add_argument("--ns", type=int, default=4)
    args = ap.parse_args()

    scene = cloud_scene(n_gaussians=args.splats, size=args.size)
    cam = scene.cameras[0]
    settings = RenderSettings(n_samples=args.ns, step_size=0.05, seed=0)
    env = scene.environment.load(scene.base_dir)
    lut = precompute_brdf_lut(64, 1024, seed=0)

    gb = rasterize(scene.gaussians, cam)
    depth_to_normal(gb, cam)
    c_d, c_s = shade_direct(gb, env, lut, cam)
    c1 = c_d + c_s

    mask = gb.shadeable_mask()
    ys, xs = np.nonzero(mask)
    rng = np.random.default_rng(0)
    pick = rng.choice(len(ys), size=min(20000, len(ys)), replace=False)
    origins = cam.unproject(np.stack([xs[pick], ys[pick]], axis=-1).astype(np.float64),
                            gb.depth[ys[pick], xs[pick]].astype(np.float64))
    dirs = rng.normal(size=(len(pick), 3))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)

    rows = []
    for backend in available_backends():
        t_raster = timeit(lambda: rasterize(scene.gaussians, cam, backend=backend))
        t_trace = timeit(lambda: trace_screen_rays(gb.depth, cam, origins, dirs,
                                                   settings, backend=backend))
        t_ssr = timeit(lambda: integrate_indirect_specular(
            gb, c1, env, lut, cam, settings, backend=backend))
        t_frame = timeit(lambda: render_frame(scene, 0, settings=settings,
                                              env=env, lut=lut, backend=backend))
        rows.append((backend, t_raster, t_trace, t_ssr, t_frame))

    print(f"\n{args.splats} splats, {args.size}x{args.size}, N_s={args.ns}, "
          f"{len(pick)} trace rays")
    print(f"{'backend':<10}{'rasterize':>12}{'trace':>12}{'ssr':>12}{'frame':>12}")
    for backend, tr, tt, ts, tf in rows:
        print(f"{backend:<10}{tr * 1e3:>10.1f}ms{tt * 1e3:>10.1f}ms"
              f"{ts * 1e3:>10.1f}ms{tf * 1e3:>10.1f}ms")
    if len(rows) == 2:
        print(f"{'speedup':<10}" + "".join(
            f"{rows[1][k] / rows[0][k]:>11.1f}x" for k in range(1, 5)))


if __name__ == "__main__":
    main()
