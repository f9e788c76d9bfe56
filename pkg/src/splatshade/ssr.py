"""One-bounce indirect specular via screen-space ray marching, plus the final
tone-mapped composite."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .brdf import BrdfLut, RHO_MIN, f0_from_material, lookup_brdf
from .envlight import Cubemap, sample_env
from .splat import Camera, GBuffer
from ._kernels import get_backend
from ._kernels.common import MAX_SAMPLES, pack_camera


@dataclass
class RenderSettings:
    n_samples: int = 8
    step_size: float = 0.05
    max_ray_length: float = 20.0
    thickness: float = 0.15
    ssr_enabled: bool = True
    exposure: float = 1.0
    gamma: float = 2.2
    seed: int = 0
    normal_mode: str = "depth"  # "depth" or "gaussian" (per-splat composited)

    def validate(self):
        if not 1 <= self.n_samples <= MAX_SAMPLES:
            raise ValueError(f"n_samples must be in [1, {MAX_SAMPLES}]")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.thickness <= 0:
            raise ValueError("thickness must be > 0")
        if self.max_ray_length <= 0:
            raise ValueError("max_ray_length must be > 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.normal_mode not in ("depth", "gaussian"):
            raise ValueError(f"unknown normal_mode {self.normal_mode!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RenderSettings":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown settings fields: {sorted(unknown)}")
        return cls(**known).validate()


@dataclass
class HitResult:
    hit: bool
    uv: np.ndarray  # pixel coords of the intersection; (-1, -1) on miss
    distance: float  # marched length at termination


def trace_screen_ray(depth: np.ndarray, camera: Camera, origin_world,
                     direction, settings: RenderSettings, *,
                     backend=None) -> HitResult:
    """March one reflection ray against the composited depth buffer.

    A hit is the first step where the ray depth crosses from in front of to
    behind the stored depth by at most ``thickness``. Leaving the viewport,
    landing on an empty pixel, or exhausting ``max_ray_length`` is a miss.
    The origin pixel is excluded from the depth test while the stored depth
    there matches the ray origin (self-hit guard).
    """
    hits, uvs, dists = trace_screen_rays(
        depth, camera, np.asarray(origin_world, dtype=np.float64)[None, :],
        np.asarray(direction, dtype=np.float64)[None, :], settings, backend=backend,
    )
    return HitResult(hit=bool(hits[0]), uv=uvs[0], distance=float(dists[0]))


def trace_screen_rays(depth, camera: Camera, origins, directions,
                      settings: RenderSettings, *, backend=None):
    """Batch form of trace_screen_ray; returns (hit, uv, distance) arrays."""
    settings.validate()
    kern = get_backend(backend)
    return kern.trace_rays_core(
        np.ascontiguousarray(depth, dtype=np.float32), pack_camera(camera),
        np.ascontiguousarray(origins, dtype=np.float64),
        np.ascontiguousarray(directions, dtype=np.float64),
        settings.step_size, settings.max_ray_length, settings.thickness,
    )


def integrate_indirect_specular(gbuffer: GBuffer, c1: np.ndarray, env: Cubemap,
                                lut: BrdfLut, camera: Camera,
                                settings: RenderSettings, *,
                                env_rot: np.ndarray | None = None,
                                backend=None):
    """Monte-Carlo estimate of one-bounce specular radiance.

    Per shadeable pixel, ``n_samples`` GGX directions are traced through the
    depth buffer; hits fetch the first-pass radiance c1, misses fall back to
    the environment along the sampled direction. The estimator averages
    f_s * c * (w_i.n) / pdf over all drawn samples (horizon-clipped samples
    contribute zero). Pixels where every sample was clipped fall back to the
    split-sum specular. Returns (c_s_prime float32, hit_count int32).
    """
    settings.validate()
    if env_rot is None:
        env_rot = np.eye(3)
    kern = get_backend(backend)

    h, w = gbuffer.height, gbuffer.width
    mask = gbuffer.shadeable_mask()
    view = camera.pixel_rays()
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    origins = camera.unproject(np.stack([xs, ys], axis=-1), gbuffer.depth.astype(np.float64))
    w_o = -view

    c_sp, hit_count, valid_count = kern.ssr_core(
        np.ascontiguousarray(gbuffer.depth, dtype=np.float32),
        np.ascontiguousarray(origins, dtype=np.float64),
        np.ascontiguousarray(w_o, dtype=np.float64),
        np.ascontiguousarray(gbuffer.normal, dtype=np.float32),
        np.ascontiguousarray(gbuffer.albedo, dtype=np.float32),
        np.ascontiguousarray(gbuffer.roughness, dtype=np.float32),
        np.ascontiguousarray(gbuffer.metallic, dtype=np.float32),
        np.ascontiguousarray(mask, dtype=np.uint8),
        np.ascontiguousarray(c1, dtype=np.float32),
        np.ascontiguousarray(env.mips[0], dtype=np.float32),
        np.ascontiguousarray(env_rot, dtype=np.float64),
        pack_camera(camera),
        settings.n_samples, settings.step_size, settings.max_ray_length,
        settings.thickness, settings.seed, RHO_MIN,
    )

    # pixels whose every sample was horizon-clipped keep the split-sum term
    fallback = mask & (valid_count == 0)
    if fallback.any():
        n = gbuffer.normal[fallback].astype(np.float64)
        v = view[fallback]
        rho = gbuffer.roughness[fallback].astype(np.float64)
        f0 = f0_from_material(gbuffer.albedo[fallback].astype(np.float64),
                              gbuffer.metallic[fallback].astype(np.float64))
        r = v - 2.0 * np.sum(v * n, axis=-1, keepdims=True) * n
        cos_nv = np.clip(-np.sum(v * n, axis=-1), 0.01, 1.0)
        c_sp[fallback] = sample_env(env, r @ env_rot.T, rho) * lookup_brdf(lut, cos_nv, rho, f0)

    return c_sp.astype(np.float32), hit_count


def composite_final(c_d: np.ndarray, c_spec: np.ndarray,
                    settings: RenderSettings) -> np.ndarray:
    """Tone map diffuse + specular to an 8-bit image.

    ldr = clamp(exposure * (c_d + c_spec), 0, 1) ** (1/gamma), rounded to
    the nearest byte.
    """
    if c_d.shape != c_spec.shape:
        raise ValueError(f"image shapes differ: {c_d.shape} vs {c_spec.shape}")
    hdr = c_d.astype(np.float64) + c_spec.astype(np.float64)
    ldr = np.clip(settings.exposure * hdr, 0.0, 1.0) ** (1.0 / settings.gamma)
    return np.round(ldr * 255.0).astype(np.uint8)
