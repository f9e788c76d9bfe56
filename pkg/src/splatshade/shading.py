"""Deferred direct-illumination pass over G-buffers."""

from __future__ import annotations

import numpy as np

from .brdf import BrdfLut, f0_from_material, lookup_brdf
from .envlight import Cubemap, sample_env
from .splat import Camera, GBuffer


def reflect_dir(v, n):
    """Mirror a camera-to-surface direction v about the surface normal n."""
    v = np.asarray(v, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return v - 2.0 * np.sum(v * n, axis=-1, keepdims=True) * n


def shade_direct(gbuffer: GBuffer, env: Cubemap, lut: BrdfLut, camera: Camera,
                 *, env_rot: np.ndarray | None = None):
    """Split-sum environment shading.

    Shadeable pixels (covered, valid normal) get a diffuse term
    (1 - metallic) * albedo * env(n, rho) and a specular term
    env(reflect(v, n), rho) * (f0 * scale + bias) from the LUT. Everything
    else shows the environment along the view ray. Returns (c_d, c_s) as
    float32 radiance images.
    """
    h, w = gbuffer.height, gbuffer.width
    if env_rot is None:
        env_rot = np.eye(3)
    view = camera.pixel_rays()

    c_d = np.zeros((h, w, 3), dtype=np.float64)
    c_s = np.zeros((h, w, 3), dtype=np.float64)

    mask = gbuffer.shadeable_mask()
    bg = ~mask
    if bg.any():
        c_d[bg] = sample_env(env, view[bg] @ env_rot.T, 0.0)

    if mask.any():
        n = gbuffer.normal[mask].astype(np.float64)
        v = view[mask]
        rho = gbuffer.roughness[mask].astype(np.float64)
        metal = gbuffer.metallic[mask].astype(np.float64)
        alb = gbuffer.albedo[mask].astype(np.float64)

        r = reflect_dir(v, n)
        cos_nv = np.clip(-np.sum(v * n, axis=-1), 0.01, 1.0)
        f0 = f0_from_material(alb, metal)
        f_s = lookup_brdf(lut, cos_nv, rho, f0)
        c_s[mask] = sample_env(env, r @ env_rot.T, rho) * f_s
        c_d[mask] = (1.0 - metal)[:, None] * alb * sample_env(env, n @ env_rot.T, rho)

    return c_d.astype(np.float32), c_s.astype(np.float32)
