"""Scene loading, G-buffer serialization, and depth-based G-buffer merging.

Scene files are versioned JSON (see docs/FORMATS.md). Unknown fields are
ignored with a warning for forward compatibility; invariant violations are
rejected naming the offending entry.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .brdf import MaterialParams
from .envlight import Cubemap, load_equirect_pfm, yaw_matrix
from .imageio import read_pfm, write_pfm
from .splat import Camera, GaussianPrimitive, GBuffer
from .ssr import RenderSettings

SCENE_VERSION = 1

_GAUSSIAN_FIELDS = {
    "mu", "rotation", "scale", "opacity", "albedo", "roughness", "metallic",
    "gamma", "group",
}
_CAMERA_FIELDS = {"fx", "fy", "cx", "cy", "width", "height", "world_from_camera", "near", "far"}


@dataclass
class EnvironmentRef:
    """Environment asset: a lat-long PFM path or an inline constant color."""

    path: str | None = None
    constant: tuple | None = None
    face_size: int = 64
    yaw: float = 0.0

    def rotation(self) -> np.ndarray:
        return yaw_matrix(self.yaw)

    def load(self, base_dir: str = ".") -> Cubemap:
        if self.path is not None:
            full = self.path if os.path.isabs(self.path) else os.path.join(base_dir, self.path)
            if not os.path.exists(full):
                raise FileNotFoundError(f"environment asset not found: {full}")
            return load_equirect_pfm(full, self.face_size)
        if self.constant is not None:
            return Cubemap.constant(self.constant, self.face_size)
        raise ValueError("environment reference has neither path nor constant")


@dataclass
class SceneDescription:
    gaussians: list
    cameras: list
    environment: EnvironmentRef
    settings: RenderSettings = field(default_factory=RenderSettings)
    base_dir: str = "."

    def groups(self) -> list:
        seen = []
        for g in self.gaussians:
            if g.group_id not in seen:
                seen.append(g.group_id)
        return seen


def _parse_gaussian(d: dict, idx: int) -> GaussianPrimitive:
    extra = set(d) - _GAUSSIAN_FIELDS
    if extra:
        warnings.warn(f"gaussian[{idx}]: ignoring unknown fields {sorted(extra)}", stacklevel=2)
    try:
        g = GaussianPrimitive(
            mu=d["mu"],
            rotation=d["rotation"],
            scale=d["scale"],
            opacity=float(d["opacity"]),
            material=MaterialParams(
                albedo=d["albedo"],
                roughness=float(d["roughness"]),
                metallic=float(d["metallic"]),
            ),
            gamma=float(d.get("gamma", 1.0)),
            group_id=str(d.get("group", "")),
        )
    except KeyError as e:
        raise ValueError(f"gaussian[{idx}]: missing field {e.args[0]!r}") from None
    g.validate(name=f"gaussian[{idx}]")
    return g


def _parse_camera(d: dict, idx: int) -> Camera:
    extra = set(d) - _CAMERA_FIELDS
    if extra:
        warnings.warn(f"camera[{idx}]: ignoring unknown fields {sorted(extra)}", stacklevel=2)
    try:
        cam = Camera(
            fx=float(d["fx"]), fy=float(d["fy"]),
            cx=float(d["cx"]), cy=float(d["cy"]),
            width=int(d["width"]), height=int(d["height"]),
            world_from_camera=np.asarray(d["world_from_camera"], dtype=np.float64),
            near=float(d.get("near", 0.01)), far=float(d.get("far", 100.0)),
        )
    except KeyError as e:
        raise ValueError(f"camera[{idx}]: missing field {e.args[0]!r}") from None
    cam.validate(name=f"camera[{idx}]")
    return cam


def _parse_environment(d: dict) -> EnvironmentRef:
    ref = EnvironmentRef(
        path=d.get("path"),
        constant=tuple(d["constant"]) if "constant" in d else None,
        face_size=int(d.get("face_size", 64)),
        yaw=float(d.get("yaw", 0.0)),
    )
    if ref.path is None and ref.constant is None:
        raise ValueError("environment: needs 'path' or 'constant'")
    if ref.face_size < 1 or (ref.face_size & (ref.face_size - 1)) != 0:
        raise ValueError(f"environment: face_size {ref.face_size} is not a power of two")
    return ref


def load_scene(path) -> SceneDescription:
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"scene parse error at line {e.lineno} col {e.colno}: {e.msg}") from None

    version = raw.get("version")
    if version != SCENE_VERSION:
        raise ValueError(f"unsupported scene version {version!r} (expected {SCENE_VERSION})")

    cameras = [_parse_camera(c, i) for i, c in enumerate(raw.get("cameras", []))]
    if not cameras:
        raise ValueError("scene has no cameras")
    gaussians = [_parse_gaussian(g, i) for i, g in enumerate(raw.get("gaussians", []))]
    env = _parse_environment(raw.get("environment", {"constant": (0.5, 0.5, 0.5)}))
    settings = RenderSettings.from_dict(raw.get("settings", {}))

    scene = SceneDescription(
        gaussians=gaussians, cameras=cameras, environment=env,
        settings=settings, base_dir=os.path.dirname(os.path.abspath(path)),
    )
    # fail early if a referenced asset is missing
    if env.path is not None:
        full = env.path if os.path.isabs(env.path) else os.path.join(scene.base_dir, env.path)
        if not os.path.exists(full):
            raise FileNotFoundError(f"environment asset not found: {full}")
    return scene


def save_scene(scene: SceneDescription, path):
    doc = {
        "version": SCENE_VERSION,
        "gaussians": [
            {
                "mu": g.mu.tolist(),
                "rotation": g.rotation.tolist(),
                "scale": g.scale.tolist(),
                "opacity": float(g.opacity),
                "albedo": np.asarray(g.material.albedo).reshape(3).tolist(),
                "roughness": float(g.material.roughness),
                "metallic": float(g.material.metallic),
                "gamma": float(g.gamma),
                "group": g.group_id,
            }
            for g in scene.gaussians
        ],
        "cameras": [
            {
                "fx": c.fx, "fy": c.fy, "cx": c.cx, "cy": c.cy,
                "width": c.width, "height": c.height,
                "world_from_camera": c.world_from_camera.tolist(),
                "near": c.near, "far": c.far,
            }
            for c in scene.cameras
        ],
        "environment": {
            k: v
            for k, v in (
                ("path", scene.environment.path),
                ("constant", list(scene.environment.constant) if scene.environment.constant else None),
                ("face_size", scene.environment.face_size),
                ("yaw", scene.environment.yaw),
            )
            if v is not None
        },
        "settings": scene.settings.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)


def merge_gbuffers(base: GBuffer, layer: GBuffer) -> GBuffer:
    """Depth-based composite: the layer wins where it is covered and nearer.

    A pixel takes all channels from ``layer`` when layer.accum_alpha > 0.5 and
    (base is empty there or layer depth < base depth); otherwise from ``base``.
    """
    if (base.width, base.height) != (layer.width, layer.height):
        raise ValueError(
            f"G-buffer dimensions differ: {base.width}x{base.height} vs {layer.width}x{layer.height}"
        )
    win = (layer.accum_alpha > 0.5) & ((base.depth == 0) | (layer.depth < base.depth))
    out = base.copy()
    for name in ("albedo", "roughness", "metallic", "gamma", "depth", "normal", "accum_alpha"):
        b = getattr(out, name)
        l = getattr(layer, name)
        m = win[..., None] if b.ndim == 3 else win
        np.copyto(b, np.where(m, l, b))
    return out


_GBUFFER_CHANNELS = ("albedo", "roughness", "metallic", "gamma", "depth", "normal", "accum_alpha")


def save_gbuffer(gbuffer: GBuffer, directory, prefix: str = "gbuffer") -> str:
    """Dump every channel as PFM plus a JSON manifest; returns manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = {}
    for name in _GBUFFER_CHANNELS:
        fname = f"{prefix}_{name}.pfm"
        write_pfm(getattr(gbuffer, name), os.path.join(directory, fname))
        files[name] = fname
    manifest = {
        "width": gbuffer.width,
        "height": gbuffer.height,
        "channels": files,
    }
    mpath = os.path.join(directory, f"{prefix}_manifest.json")
    with open(mpath, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
    return mpath


def load_gbuffer(manifest_path) -> GBuffer:
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    base = os.path.dirname(os.path.abspath(manifest_path))
    w, h = int(manifest["width"]), int(manifest["height"])
    gb = GBuffer.zeros(w, h)
    for name in _GBUFFER_CHANNELS:
        if name not in manifest["channels"]:
            raise ValueError(f"manifest missing channel {name!r}")
        img = read_pfm(os.path.join(base, manifest["channels"][name]))
        if img.shape[:2] != (h, w):
            raise ValueError(f"channel {name}: shape {img.shape} != {h}x{w}")
        setattr(gb, name, img.astype(np.float32))
    return gb


def channel_to_u8(gbuffer: GBuffer, name: str, camera: Camera | None = None) -> np.ndarray:
    """Map a G-buffer channel to displayable 8-bit RGB.

    Scalars clamp to [0,1]; normals map (n+1)/2; depth normalizes to
    [near, far] (empty pixels stay 0). The frontend uses the same mapping.
    """
    if name == "albedo":
        v = np.clip(gbuffer.albedo, 0.0, 1.0)
    elif name in ("roughness", "metallic", "gamma", "alpha"):
        src = gbuffer.accum_alpha if name == "alpha" else getattr(gbuffer, name)
        v = np.repeat(np.clip(src, 0.0, 1.0)[..., None], 3, axis=-1)
    elif name == "normal":
        v = np.clip((gbuffer.normal + 1.0) * 0.5, 0.0, 1.0)
    elif name == "depth":
        if camera is None:
            raise ValueError("depth mapping needs the camera for [near, far]")
        d = np.clip((gbuffer.depth - camera.near) / (camera.far - camera.near), 0.0, 1.0)
        d = np.where(gbuffer.depth > 0, d, 0.0)
        v = np.repeat(d[..., None], 3, axis=-1)
    else:
        raise ValueError(f"unknown channel {name!r}")
    # scale in double precision so the mapping is exactly reproducible
    return np.round(v.astype(np.float64) * 255.0).astype(np.uint8)
