"""Full-frame rendering: rasterize, shade, trace, tone map."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .brdf import BrdfLut, precompute_brdf_lut
from .envlight import Cubemap
from .sceneio import SceneDescription, merge_gbuffers
from .shading import shade_direct
from .splat import Camera, GBuffer, depth_to_normal, rasterize
from .ssr import RenderSettings, composite_final, integrate_indirect_specular


@functools.lru_cache(maxsize=4)
def default_lut(resolution: int = 64, samples_per_entry: int = 1024, seed: int = 0) -> BrdfLut:
    return precompute_brdf_lut(resolution, samples_per_entry, seed)


@dataclass
class RenderResult:
    gbuffer: GBuffer
    c_d: np.ndarray
    c_s: np.ndarray  # split-sum specular
    c_spec: np.ndarray  # specular actually composited (SSR estimate when enabled)
    hdr: np.ndarray
    ldr: np.ndarray
    hit_count: np.ndarray | None


def render_frame(scene: SceneDescription, camera, *,
                 settings: RenderSettings | None = None,
                 overrides: dict | None = None,
                 extra_gaussians: list | None = None,
                 layers: list | None = None,
                 env: Cubemap | None = None,
                 env_rot: np.ndarray | None = None,
                 lut: BrdfLut | None = None,
                 backend=None) -> RenderResult:
    """Render one frame of a scene.

    ``camera`` is a Camera or an index into scene.cameras. ``overrides`` maps
    group_id to partial material patches, ``extra_gaussians`` are appended to
    the scene (object insertion), and ``layers`` are pre-baked G-buffers
    merged by depth after rasterization.
    """
    if isinstance(camera, int):
        camera = scene.cameras[camera]
    settings = (settings or scene.settings).validate()
    if env is None:
        env = scene.environment.load(scene.base_dir)
    if env_rot is None:
        env_rot = scene.environment.rotation()
    if lut is None:
        lut = default_lut()

    gaussians = scene.gaussians
    if extra_gaussians:
        gaussians = list(gaussians) + list(extra_gaussians)

    normal_mode = "gaussian" if settings.normal_mode == "gaussian" else "none"
    gb = rasterize(gaussians, camera, normal_mode=normal_mode,
                   overrides=overrides, backend=backend)
    for layer in layers or ():
        gb = merge_gbuffers(gb, layer)
    if settings.normal_mode == "depth":
        gb = depth_to_normal(gb, camera)

    c_d, c_s = shade_direct(gb, env, lut, camera, env_rot=env_rot)

    hit_count = None
    if settings.ssr_enabled:
        c1 = c_d + c_s
        c_spec, hit_count = integrate_indirect_specular(
            gb, c1, env, lut, camera, settings, env_rot=env_rot, backend=backend)
    else:
        c_spec = c_s

    hdr = (c_d.astype(np.float64) + c_spec.astype(np.float64)).astype(np.float32)
    ldr = composite_final(c_d, c_spec, settings)
    return RenderResult(gbuffer=gb, c_d=c_d, c_s=c_s, c_spec=c_spec,
                        hdr=hdr, ldr=ldr, hit_count=hit_count)
