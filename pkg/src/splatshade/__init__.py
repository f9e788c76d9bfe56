"""Deferred shading for material-augmented 3D Gaussian scenes.

Rasterizes splats into G-buffers, shades them against an environment cubemap
via the split-sum approximation, and adds one-bounce indirect specular light
by Monte-Carlo screen-space ray tracing.
"""

from ._kernels import DEFAULT_BACKEND, available_backends
from .brdf import (
    BrdfLut,
    MaterialParams,
    eval_brdf,
    f0_from_material,
    fresnel_schlick,
    ggx_ndf,
    lookup_brdf,
    precompute_brdf_lut,
    sample_ggx,
    smith_geometry,
)
from .envlight import Cubemap, build_mip_chain, direction_to_face_uv, load_equirect, sample_env
from .metrics import LossWeights, loss_normal, loss_opacity, loss_rgb, loss_tv, psnr, ssim
from .pipeline import RenderResult, default_lut, render_frame
from .sceneio import (
    EnvironmentRef,
    SceneDescription,
    load_gbuffer,
    load_scene,
    merge_gbuffers,
    save_gbuffer,
    save_scene,
)
from .shading import reflect_dir, shade_direct
from .splat import (
    Camera,
    GaussianPrimitive,
    GBuffer,
    composite_normals_per_gaussian,
    depth_to_normal,
    eval_gaussian,
    project_gaussian,
    rasterize,
)
from .ssr import (
    HitResult,
    RenderSettings,
    composite_final,
    integrate_indirect_specular,
    trace_screen_ray,
)

__version__ = "0.1.0"
