"""Thin adapter exposing the compiled kernels behind the backend interface."""

from __future__ import annotations

import numpy as np

from . import _cpu

NAME = "cython"


def rasterize_core(mean2d, conic, radius, opacity, channels, width, height,
                   alpha_clamp, t_stop, q_max):
    return _cpu.rasterize_core(
        np.ascontiguousarray(mean2d, dtype=np.float64),
        np.ascontiguousarray(conic, dtype=np.float64),
        np.ascontiguousarray(radius, dtype=np.float64),
        np.ascontiguousarray(opacity, dtype=np.float64),
        np.ascontiguousarray(channels, dtype=np.float64),
        int(width), int(height),
        float(alpha_clamp), float(t_stop), float(q_max),
    )


def trace_rays_core(depth, cam, origins, dirs, step_size, max_len, thickness):
    return _cpu.trace_rays_core(
        np.ascontiguousarray(depth, dtype=np.float32),
        cam,
        np.ascontiguousarray(origins, dtype=np.float64),
        np.ascontiguousarray(dirs, dtype=np.float64),
        float(step_size), float(max_len), float(thickness),
    )


def ssr_core(depth, origins, w_o_img, normal, albedo, rough, metal, mask,
             c1, env_mip0, env_rot, cam, n_samples, step_size, max_len,
             thickness, seed, rho_min):
    return _cpu.ssr_core(
        np.ascontiguousarray(depth, dtype=np.float32),
        np.ascontiguousarray(origins, dtype=np.float64),
        np.ascontiguousarray(w_o_img, dtype=np.float64),
        np.ascontiguousarray(normal, dtype=np.float32),
        np.ascontiguousarray(albedo, dtype=np.float32),
        np.ascontiguousarray(rough, dtype=np.float32),
        np.ascontiguousarray(metal, dtype=np.float32),
        np.ascontiguousarray(mask, dtype=np.uint8),
        np.ascontiguousarray(c1, dtype=np.float32),
        np.ascontiguousarray(env_mip0, dtype=np.float32),
        np.ascontiguousarray(env_rot, dtype=np.float64),
        cam,
        int(n_samples), float(step_size), float(max_len), float(thickness),
        int(seed) & 0xFFFFFFFFFFFFFFFF, float(rho_min),
    )
