"""Rasterize material-augmented 3D Gaussians into G-buffers.

Conventions: camera space is x-right / y-down / +z forward; the sample point
of pixel (ix, iy) is exactly (float(ix), float(iy)) in continuous pixel
coordinates. World layout is free, but environment maps treat +Y as up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .brdf import MaterialParams
from ._kernels import get_backend

# Contributions with Gaussian exponent q > Q_MAX are skipped: their weight is
# below opacity * 1e-8, invisible at the rasterizer's 1e-5 oracle tolerance.
Q_MAX = 2.0 * np.log(1e8)
ALPHA_CLAMP = 0.99
T_STOP = 1e-4
COV2D_INFLATION = 0.3


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion (normalized first)."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


@dataclass
class GaussianPrimitive:
    """One splat: geometry (mu, rotation, scale), opacity, and material."""

    mu: np.ndarray
    rotation: np.ndarray  # unit quaternion, (w, x, y, z)
    scale: np.ndarray
    opacity: float
    material: MaterialParams
    gamma: float = 1.0  # extra composited channel, not consumed by shading
    group_id: str = ""

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        self.scale = np.asarray(self.scale, dtype=np.float64).reshape(3)

    def validate(self, name: str = "gaussian"):
        if abs(np.linalg.norm(self.rotation) - 1.0) > 1e-6:
            raise ValueError(f"{name}: quaternion norm {np.linalg.norm(self.rotation):.6f} != 1")
        if np.any(self.scale <= 0):
            raise ValueError(f"{name}: scale components must be > 0")
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError(f"{name}: opacity {self.opacity} outside [0,1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"{name}: gamma {self.gamma} outside [0,1]")
        if not np.all(np.isfinite(self.mu)):
            raise ValueError(f"{name}: non-finite position")

    def covariance(self) -> np.ndarray:
        r = quat_to_matrix(self.rotation)
        s = np.diag(self.scale**2)
        return r @ s @ r.T


@dataclass
class Camera:
    """Pinhole camera; ``world_from_camera`` is a rigid 4x4 transform."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_from_camera: np.ndarray
    near: float = 0.01
    far: float = 100.0

    def __post_init__(self):
        self.world_from_camera = np.asarray(self.world_from_camera, dtype=np.float64).reshape(4, 4)

    def validate(self, name: str = "camera"):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"{name}: focal lengths must be > 0")
        if not 0 < self.near < self.far:
            raise ValueError(f"{name}: need 0 < near < far")
        r = self.world_from_camera[:3, :3]
        if np.abs(r @ r.T - np.eye(3)).max() > 1e-5:
            raise ValueError(f"{name}: world_from_camera is not rigid")

    @property
    def position(self) -> np.ndarray:
        return self.world_from_camera[:3, 3]

    @property
    def rotation_wc(self) -> np.ndarray:
        """World-from-camera rotation."""
        return self.world_from_camera[:3, :3]

    @property
    def rotation_cw(self) -> np.ndarray:
        """Camera-from-world rotation."""
        return self.world_from_camera[:3, :3].T

    def world_to_camera(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return (p - self.position) @ self.rotation_wc

    def camera_to_world(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation_cw + self.position

    def project(self, points):
        """World points -> (uv pixel coords, camera-space depth)."""
        pc = self.world_to_camera(points)
        z = pc[..., 2]
        zs = np.where(np.abs(z) < 1e-12, 1e-12, z)
        u = self.fx * pc[..., 0] / zs + self.cx
        v = self.fy * pc[..., 1] / zs + self.cy
        return np.stack([u, v], axis=-1), z

    def unproject(self, uv, z):
        """Pixel coords + camera depth -> world points."""
        uv = np.asarray(uv, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        x = (uv[..., 0] - self.cx) / self.fx * z
        y = (uv[..., 1] - self.cy) / self.fy * z
        pc = np.stack([x, y, z], axis=-1)
        return self.camera_to_world(pc)

    def pixel_rays(self) -> np.ndarray:
        """Unit world-space ray direction through every pixel sample, (H, W, 3)."""
        xs = np.arange(self.width, dtype=np.float64)
        ys = np.arange(self.height, dtype=np.float64)
        u, v = np.meshgrid(xs, ys)
        d = np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=-1)
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        return d @ self.rotation_cw

    @classmethod
    def look_at(cls, position, target, up=(0.0, 1.0, 0.0), *, fov_deg=60.0,
                width=256, height=256, near=0.05, far=100.0) -> "Camera":
        position = np.asarray(position, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - position
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        wfc = np.eye(4)
        wfc[:3, 0], wfc[:3, 1], wfc[:3, 2], wfc[:3, 3] = right, down, forward, position
        fx = 0.5 * width / np.tan(np.radians(fov_deg) / 2)
        return cls(fx=fx, fy=fx, cx=(width - 1) / 2, cy=(height - 1) / 2,
                   width=width, height=height, world_from_camera=wfc, near=near, far=far)


@dataclass
class GBuffer:
    """Per-pixel composited material and geometry channels."""

    width: int
    height: int
    albedo: np.ndarray
    roughness: np.ndarray
    metallic: np.ndarray
    gamma: np.ndarray
    depth: np.ndarray
    normal: np.ndarray
    accum_alpha: np.ndarray

    @classmethod
    def zeros(cls, width: int, height: int) -> "GBuffer":
        return cls(
            width=width,
            height=height,
            albedo=np.zeros((height, width, 3), dtype=np.float32),
            roughness=np.zeros((height, width), dtype=np.float32),
            metallic=np.zeros((height, width), dtype=np.float32),
            gamma=np.zeros((height, width), dtype=np.float32),
            depth=np.zeros((height, width), dtype=np.float32),
            normal=np.zeros((height, width, 3), dtype=np.float32),
            accum_alpha=np.zeros((height, width), dtype=np.float32),
        )

    def shadeable_mask(self) -> np.ndarray:
        cover = self.accum_alpha > 0.5
        valid_n = np.linalg.norm(self.normal, axis=-1) > 0.5
        return cover & valid_n

    def copy(self) -> "GBuffer":
        return GBuffer(
            width=self.width, height=self.height,
            albedo=self.albedo.copy(), roughness=self.roughness.copy(),
            metallic=self.metallic.copy(), gamma=self.gamma.copy(),
            depth=self.depth.copy(), normal=self.normal.copy(),
            accum_alpha=self.accum_alpha.copy(),
        )


def eval_gaussian(g: GaussianPrimitive, x) -> float:
    """Unnormalized Gaussian density exp(-0.5 (x-mu)^T Sigma^-1 (x-mu))."""
    d = np.asarray(x, dtype=np.float64) - g.mu
    q = d @ np.linalg.inv(g.covariance()) @ d
    return float(np.exp(-0.5 * q))


def pack_gaussians(gaussians, overrides=None):
    """Flatten primitives into arrays; material overrides apply per group_id.

    Returns a dict with mu, cov, z-sortable fields, material channels and the
    camera-independent shortest-axis normal direction.
    """
    n = len(gaussians)
    mu = np.zeros((n, 3))
    cov = np.zeros((n, 3, 3))
    opacity = np.zeros(n)
    albedo = np.zeros((n, 3))
    rough = np.zeros(n)
    metal = np.zeros(n)
    gamma = np.zeros(n)
    axis = np.zeros((n, 3))
    groups = []
    for i, g in enumerate(gaussians):
        mu[i] = g.mu
        r = quat_to_matrix(g.rotation)
        cov[i] = r @ np.diag(g.scale**2) @ r.T
        opacity[i] = g.opacity
        albedo[i] = np.asarray(g.material.albedo, dtype=np.float64).reshape(3)
        rough[i] = float(g.material.roughness)
        metal[i] = float(g.material.metallic)
        gamma[i] = g.gamma
        axis[i] = r[:, int(np.argmin(g.scale))]
        groups.append(g.group_id)

    if overrides:
        groups_arr = np.array(groups)
        for gid, patch in overrides.items():
            m = groups_arr == gid
            if not m.any():
                continue
            if "albedo" in patch:
                albedo[m] = np.clip(np.asarray(patch["albedo"], dtype=np.float64), 0, 1)
            if "roughness" in patch:
                rough[m] = np.clip(float(patch["roughness"]), 0, 1)
            if "metallic" in patch:
                metal[m] = np.clip(float(patch["metallic"]), 0, 1)
            if "gamma" in patch:
                gamma[m] = np.clip(float(patch["gamma"]), 0, 1)

    return {
        "mu": mu, "cov": cov, "opacity": opacity, "albedo": albedo,
        "roughness": rough, "metallic": metal, "gamma": gamma,
        "axis": axis, "groups": groups,
    }


def project_gaussian(g: GaussianPrimitive, camera: Camera):
    """Project one Gaussian; returns (mean2d, cov2d, z) or None when culled."""
    packed = pack_gaussians([g])
    mean2d, cov2d, z, valid, _ = _project_packed(packed, camera)
    if not valid[0]:
        return None
    return mean2d[0], cov2d[0], float(z[0])


def _project_packed(packed, camera: Camera):
    """EWA-style projection of all Gaussians: perspective Jacobian at mu."""
    mu_cam = camera.world_to_camera(packed["mu"])
    z = mu_cam[:, 2]
    valid = (z > camera.near) & (z < camera.far)

    zs = np.where(np.abs(z) < 1e-12, 1e-12, z)
    u = camera.fx * mu_cam[:, 0] / zs + camera.cx
    v = camera.fy * mu_cam[:, 1] / zs + camera.cy
    mean2d = np.stack([u, v], axis=-1)

    w = camera.rotation_cw
    cov_cam = np.einsum("ab,nbc,dc->nad", w, packed["cov"], w)
    n = len(z)
    j = np.zeros((n, 2, 3))
    j[:, 0, 0] = camera.fx / zs
    j[:, 0, 2] = -camera.fx * mu_cam[:, 0] / zs**2
    j[:, 1, 1] = camera.fy / zs
    j[:, 1, 2] = -camera.fy * mu_cam[:, 1] / zs**2
    cov2d = np.einsum("nab,nbc,ndc->nad", j, cov_cam, j)
    cov2d[:, 0, 0] += COV2D_INFLATION
    cov2d[:, 1, 1] += COV2D_INFLATION
    return mean2d, cov2d, z, valid, mu_cam


def _prepare_raster_inputs(packed, camera: Camera, normal_mode: str):
    mean2d, cov2d, z, valid, _ = _project_packed(packed, camera)

    det = cov2d[:, 0, 0] * cov2d[:, 1, 1] - cov2d[:, 0, 1] ** 2
    singular = valid & (det <= 1e-12)
    valid = valid & ~singular
    det_s = np.where(det <= 1e-12, 1.0, det)
    conic = np.stack(
        [cov2d[:, 1, 1] / det_s, -cov2d[:, 0, 1] / det_s, cov2d[:, 0, 0] / det_s], axis=-1
    )
    lam_max = 0.5 * (cov2d[:, 0, 0] + cov2d[:, 1, 1]) + np.sqrt(
        np.maximum(0.25 * (cov2d[:, 0, 0] - cov2d[:, 1, 1]) ** 2 + cov2d[:, 0, 1] ** 2, 0.0)
    )
    radius = np.sqrt(np.maximum(Q_MAX * lam_max, 0.0))

    # cull splats whose footprint misses the viewport entirely
    on_screen = (
        (mean2d[:, 0] + radius >= -0.5)
        & (mean2d[:, 0] - radius <= camera.width - 0.5)
        & (mean2d[:, 1] + radius >= -0.5)
        & (mean2d[:, 1] - radius <= camera.height - 0.5)
    )
    valid = valid & on_screen

    channels = [
        packed["albedo"],
        packed["roughness"][:, None],
        packed["metallic"][:, None],
        packed["gamma"][:, None],
    ]
    if normal_mode == "gaussian":
        to_cam = packed["mu"] - camera.position
        axis = packed["axis"].copy()
        flip = np.sum(axis * to_cam, axis=-1) > 0
        axis[flip] *= -1.0
        channels.append(axis)
    chan = np.concatenate(channels, axis=-1)
    chan = np.concatenate([chan, z[:, None]], axis=-1)  # depth rides along as a channel

    idx = np.nonzero(valid)[0]
    order = idx[np.argsort(z[idx], kind="stable")]
    return {
        "mean2d": np.ascontiguousarray(mean2d[order]),
        "conic": np.ascontiguousarray(conic[order]),
        "radius": np.ascontiguousarray(radius[order]),
        "opacity": np.ascontiguousarray(packed["opacity"][order]),
        "channels": np.ascontiguousarray(chan[order]),
        "skipped_singular": int(singular.sum()),
    }


def rasterize(gaussians, camera: Camera, *, normal_mode: str = "none",
              overrides=None, backend=None) -> GBuffer:
    """Alpha-composite Gaussians into a G-buffer, front to back.

    Per-pixel weight is opacity * exp(-0.5 q) clamped to 0.99; accumulation
    stops once transmittance drops below 1e-4. The composited depth is
    normalized by accumulated alpha so covered pixels carry metric depth.
    ``normal_mode="gaussian"`` additionally composites per-Gaussian
    shortest-axis normals (renormalized); ``"none"`` leaves normals zero for
    a later depth-normal pass.
    """
    if normal_mode not in ("none", "gaussian"):
        raise ValueError(f"unknown normal_mode {normal_mode!r}")
    gb = GBuffer.zeros(camera.width, camera.height)
    if len(gaussians) == 0:
        return gb

    packed = pack_gaussians(gaussians, overrides)
    inputs = _prepare_raster_inputs(packed, camera, normal_mode)
    if inputs["skipped_singular"]:
        import warnings

        warnings.warn(f"skipped {inputs['skipped_singular']} singular splats", stacklevel=2)
    if len(inputs["opacity"]) == 0:
        return gb

    kern = get_backend(backend)
    chan_img, alpha = kern.rasterize_core(
        inputs["mean2d"], inputs["conic"], inputs["radius"], inputs["opacity"],
        inputs["channels"], camera.width, camera.height,
        ALPHA_CLAMP, T_STOP, Q_MAX,
    )

    gb.albedo = chan_img[..., 0:3].astype(np.float32)
    gb.roughness = chan_img[..., 3].astype(np.float32)
    gb.metallic = chan_img[..., 4].astype(np.float32)
    gb.gamma = chan_img[..., 5].astype(np.float32)
    if normal_mode == "gaussian":
        nacc = chan_img[..., 6:9]
        norm = np.linalg.norm(nacc, axis=-1, keepdims=True)
        gb.normal = np.where(norm > 1e-12, nacc / np.maximum(norm, 1e-300), 0.0).astype(np.float32)
    covered = alpha > 1e-6
    zacc = chan_img[..., -1]
    gb.depth = np.where(covered, zacc / np.maximum(alpha, 1e-300), 0.0).astype(np.float32)
    gb.accum_alpha = alpha.astype(np.float32)
    return gb


def depth_to_normal(gbuffer: GBuffer, camera: Camera) -> GBuffer:
    """Fill the normal channel from finite differences of unprojected depth.

    Interior pixels use +x/+y neighbors; the last row/column falls back to
    one-sided (backward) differences. Normals face the camera. Pixels whose
    stencil touches empty depth keep a zero normal and stay unshadeable.
    """
    h, w = gbuffer.height, gbuffer.width
    z = gbuffer.depth.astype(np.float64)
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    u, v = np.meshgrid(xs, ys)
    p = np.stack([(u - camera.cx) / camera.fx * z, (v - camera.cy) / camera.fy * z, z], axis=-1)

    def shift_valid(arr, du, dv):
        out = np.roll(np.roll(arr, -dv, axis=0), -du, axis=1)
        ok = np.ones((h, w), dtype=bool)
        if du > 0:
            ok[:, w - du:] = False
        if dv > 0:
            ok[h - dv:, :] = False
        return out, ok

    px, okx = shift_valid(p, 1, 0)
    py, oky = shift_valid(p, 0, 1)
    dx = np.where(okx[..., None], px - p, 0.0)
    dy = np.where(oky[..., None], py - p, 0.0)
    # one-sided at the +x / +y borders
    dx[:, -1] = p[:, -1] - p[:, -2]
    dy[-1, :] = p[-1, :] - p[-2, :]

    nbx = np.empty_like(z, dtype=bool)
    nbx[:, :-1] = gbuffer.depth[:, 1:] > 0
    nbx[:, -1] = gbuffer.depth[:, -2] > 0
    nby = np.empty_like(z, dtype=bool)
    nby[:-1, :] = gbuffer.depth[1:, :] > 0
    nby[-1, :] = gbuffer.depth[-2, :] > 0
    stencil_ok = (gbuffer.depth > 0) & nbx & nby

    n_cam = np.cross(dx, dy)
    length = np.linalg.norm(n_cam, axis=-1, keepdims=True)
    degenerate = length[..., 0] < 1e-12
    n_cam = np.where(degenerate[..., None], 0.0, n_cam / np.maximum(length, 1e-300))

    view = p / np.maximum(np.linalg.norm(p, axis=-1, keepdims=True), 1e-12)
    flip = np.sum(n_cam * view, axis=-1) > 0
    n_cam = np.where(flip[..., None], -n_cam, n_cam)

    n_world = n_cam @ camera.rotation_cw
    ok = stencil_ok & ~degenerate
    gbuffer.normal = np.where(ok[..., None], n_world, 0.0).astype(np.float32)
    return gbuffer


def composite_normals_per_gaussian(gaussians, camera: Camera, *, overrides=None,
                                   backend=None) -> np.ndarray:
    """Alternate normal path: composite per-Gaussian shortest-axis normals.

    Returns the (H, W, 3) renormalized normal image (zero where uncovered).
    """
    gb = rasterize(gaussians, camera, normal_mode="gaussian",
                   overrides=overrides, backend=backend)
    return gb.normal
