"""Shared synthetic scenes: a mirror floor facing a bright wall.

Two builds of the same room: an exact two-plane G-buffer (for ray-marching
accuracy tests) and a Gaussian-splat version (for end-to-end editing tests).
World is y-up; the wall is the plane z = wall_z.
"""

from __future__ import annotations

import numpy as np

from splatshade import Camera, GaussianPrimitive, MaterialParams
from splatshade.sceneio import EnvironmentRef, SceneDescription
from splatshade.ssr import RenderSettings

from oracles import intersect_plane, plane_gbuffer

FLOOR_N = np.array([0.0, 1.0, 0.0])
WALL_N = np.array([0.0, 0.0, -1.0])
WALL_Z = 4.0
# billboard patch geometry shared with the editing tests; the patch floats
# high enough that its splat footprints (cut off at radius ~6.1 sigma by the
# rasterizer) never touch the floor/wall seam
WALL_CENTER_Y = 1.7
WALL_PATCH_HALF = (1.2, 0.7)
WALL_SPLAT_SPACING = 0.22
WALL_SPLAT_RATIO = 0.7
WALL_SPLAT_SIGMA = WALL_SPLAT_SPACING * WALL_SPLAT_RATIO


def mirror_camera(size=256, fov_deg=60.0) -> Camera:
    # high enough over the floor that splat footprints stay compact in frame
    # and the billboard's mirror image lands on solid mid-floor
    return Camera.look_at(
        position=(0.0, 2.8, -3.0), target=(0.0, 0.8, 2.0),
        fov_deg=fov_deg, width=size, height=size, near=0.05, far=60.0,
    )


def mirror_plane_gbuffer(cam: Camera, floor_rough=0.01, floor_metal=1.0,
                         wall_albedo=(0.9, 0.15, 0.1)):
    floor_mat = dict(albedo=(1.0, 1.0, 1.0), roughness=floor_rough, metallic=floor_metal)
    wall_mat = dict(albedo=wall_albedo, roughness=0.8, metallic=0.0)
    return plane_gbuffer(cam, [
        dict(n=FLOOR_N, p0=(0.0, 0.0, 0.0), material=floor_mat,
             bounds=lambda p: p[..., 2] < WALL_Z),
        dict(n=WALL_N, p0=(0.0, 0.0, WALL_Z), material=wall_mat),
    ])


def floor_pixels_mask(gb) -> np.ndarray:
    return (np.abs(gb.normal @ FLOOR_N) > 0.9) & (gb.accum_alpha > 0.5)


def analytic_mirror_uv(cam: Camera, gb):
    """Exact mirrored-hit UV per floor pixel.

    Reflects each floor pixel's view ray about the floor normal and intersects
    it with the wall plane. Returns (valid mask, uv array (H, W, 2)).
    """
    h, w = gb.height, gb.width
    rays = cam.pixel_rays()
    uv = np.full((h, w, 2), -1.0)
    valid = np.zeros((h, w), dtype=bool)
    floor = floor_pixels_mask(gb)
    ys, xs = np.nonzero(floor)
    for py, px in zip(ys, xs):
        p = cam.unproject(np.array([float(px), float(py)]), float(gb.depth[py, px]))
        v = rays[py, px]
        r = v - 2.0 * float(v @ FLOOR_N) * FLOOR_N
        q = intersect_plane(p, r, WALL_N, (0.0, 0.0, WALL_Z))
        if q is None:
            continue
        q_uv, q_z = cam.project(q)
        if q_z <= cam.near:
            continue
        if not (0 <= q_uv[0] <= w - 1 and 0 <= q_uv[1] <= h - 1):
            continue
        uv[py, px] = q_uv
        valid[py, px] = True
    return valid, uv


def _grid_splats(center, right, up, extent_r, extent_u, spacing, normal_axis,
                 material, group, opacity=0.97, gamma=1.0, size_ratio=1.1):
    """Overlapping disc splats tiling a rectangle of a plane."""
    right = np.asarray(right, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    out = []
    s = spacing * size_ratio
    scale = {
        "x": (1e-3, s, s), "y": (s, 1e-3, s), "z": (s, s, 1e-3),
    }[normal_axis]
    nr = int(np.ceil(extent_r / spacing))
    nu = int(np.ceil(extent_u / spacing))
    for i in range(-nr, nr + 1):
        for j in range(-nu, nu + 1):
            mu = center + right * (i * spacing) + up * (j * spacing)
            out.append(GaussianPrimitive(
                mu=mu, rotation=(1.0, 0.0, 0.0, 0.0), scale=scale,
                opacity=opacity, material=MaterialParams(**material),
                gamma=gamma, group_id=group,
            ))
    return out


def mirror_splat_scene(size=256, floor_rough=0.01, n_samples=8, seed=0,
                       step_size=0.02, wall_albedo=(0.9, 0.15, 0.1),
                       env_value=(0.5, 0.5, 0.5), floor_layers=4,
                       floor_spacing=0.25) -> SceneDescription:
    """Gaussian-splat mirror room: metallic floor, diffuse billboard wall.

    The staggered floor layers push the floor's transmittance below the
    rasterizer's 1e-4 stop threshold, so nothing behind it leaks into the
    floor's composited material channels.
    """
    floor_mat = dict(albedo=(1.0, 1.0, 1.0), roughness=floor_rough, metallic=1.0)
    wall_mat = dict(albedo=wall_albedo, roughness=0.8, metallic=0.0)
    side_mat = dict(albedo=(0.2, 0.25, 0.3), roughness=0.6, metallic=0.0)

    gaussians = []
    # staggered floor layers: alpha clamps at 0.99 per splat, so several
    # stacked layers are needed to drive transmittance under the 1e-4 stop;
    # the near edge stays out of frame to avoid grazing footprint smear
    offsets = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.0), (0.0, 0.5)][:floor_layers]
    for k, (ox, oz) in enumerate(offsets):
        gaussians += _grid_splats(
            (ox * floor_spacing, -0.005 * k, 2.5 + oz * floor_spacing),
            (1, 0, 0), (0, 0, 1), 3.0, 1.9, floor_spacing, "y", floor_mat,
            "floor", opacity=0.99)
    # bright billboard patch in the middle of the wall; small splats keep the
    # footprint halo tight so the editing masks have room around it
    gaussians += _grid_splats((0.0, WALL_CENTER_Y, WALL_Z), (1, 0, 0), (0, 1, 0),
                              WALL_PATCH_HALF[0], WALL_PATCH_HALF[1],
                              WALL_SPLAT_SPACING, "z", wall_mat, "wall",
                              size_ratio=WALL_SPLAT_RATIO)
    # surrounding wall areas, pulled clear of the billboard so their halos
    # do not blanket it (the pitched camera sorts high splats nearer)
    gaussians += _grid_splats((0.0, 3.9, WALL_Z + 0.05), (1, 0, 0), (0, 1, 0), 4.2, 1.0, 0.6,
                              "z", side_mat, "backdrop", size_ratio=0.7)
    gaussians += _grid_splats((-3.6, 1.2, WALL_Z + 0.05), (1, 0, 0), (0, 1, 0), 1.3, 1.4, 0.6,
                              "z", side_mat, "backdrop", size_ratio=0.7)
    gaussians += _grid_splats((3.6, 1.2, WALL_Z + 0.05), (1, 0, 0), (0, 1, 0), 1.3, 1.4, 0.6,
                              "z", side_mat, "backdrop", size_ratio=0.7)

    cam = mirror_camera(size=size)
    settings = RenderSettings(n_samples=n_samples, step_size=step_size, seed=seed)
    return SceneDescription(
        gaussians=gaussians, cameras=[cam],
        environment=EnvironmentRef(constant=tuple(env_value), face_size=32),
        settings=settings,
    )


def cloud_scene(n_gaussians=500, size=256, seed=3) -> SceneDescription:
    """Mirror room plus a random splat cloud, for performance smoke tests."""
    scene = mirror_splat_scene(size=size, floor_layers=1, floor_spacing=0.4)
    rng = np.random.default_rng(seed)
    extra = n_gaussians - len(scene.gaussians)
    for _ in range(max(extra, 0)):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        scene.gaussians.append(GaussianPrimitive(
            mu=rng.uniform([-3, 0.1, 0.5], [3, 2.5, 3.8]),
            rotation=q, scale=rng.uniform(0.03, 0.2, 3),
            opacity=rng.uniform(0.3, 0.95),
            material=MaterialParams(rng.random(3), rng.uniform(0.1, 1.0), rng.random()),
            gamma=rng.random(), group_id="cloud",
        ))
    del scene.gaussians[n_gaussians:]
    return scene
