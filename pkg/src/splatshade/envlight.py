"""Cubemap environment light with a box-filtered mip chain.

Face order is (+X, -X, +Y, -Y, +Z, -Z). For a direction d the face is the
axis of largest |component| (ties break toward the lower face index) and the
in-face coordinates come from the two remaining components:

    face 0 (+X): u = (-z/|x| + 1)/2   v = (-y/|x| + 1)/2
    face 1 (-X): u = ( z/|x| + 1)/2   v = (-y/|x| + 1)/2
    face 2 (+Y): u = ( x/|y| + 1)/2   v = ( z/|y| + 1)/2
    face 3 (-Y): u = ( x/|y| + 1)/2   v = (-z/|y| + 1)/2
    face 4 (+Z): u = ( x/|z| + 1)/2   v = (-y/|z| + 1)/2
    face 5 (-Z): u = (-x/|z| + 1)/2   v = (-y/|z| + 1)/2

Texel (col, row) of an S-sized face spans u in [col/S, (col+1)/S); its center
is at (col + 0.5)/S. Bilinear filtering clamps at face edges (no seam blend).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imageio import read_pfm, write_pfm

_FACE_NAMES = ("posx", "negx", "posy", "negy", "posz", "negz")


@dataclass
class Cubemap:
    """Six-face HDR radiance map plus mips down to 1x1.

    ``mips[k]`` has shape (6, S>>k, S>>k, 3); ``mips[0]`` is the full
    resolution data. Immutable by convention once built.
    """

    face_size: int
    mips: list = field(default_factory=list)

    @property
    def lambda_max(self) -> float:
        return float(np.log2(self.face_size))

    @property
    def faces(self) -> np.ndarray:
        return self.mips[0]

    @classmethod
    def from_faces(cls, faces: np.ndarray) -> "Cubemap":
        faces = np.asarray(faces, dtype=np.float32)
        if faces.ndim != 4 or faces.shape[0] != 6 or faces.shape[3] != 3:
            raise ValueError(f"faces must be (6, S, S, 3), got {faces.shape}")
        s = faces.shape[1]
        if faces.shape[2] != s:
            raise ValueError("cubemap faces must be square")
        if s < 1 or (s & (s - 1)) != 0:
            raise ValueError(f"face size must be a power of two, got {s}")
        if not np.all(np.isfinite(faces)) or faces.min() < 0:
            raise ValueError("cubemap radiance must be finite and >= 0")
        return build_mip_chain(cls(face_size=s, mips=[faces]))

    @classmethod
    def constant(cls, value, face_size: int = 16) -> "Cubemap":
        value = np.asarray(value, dtype=np.float32).reshape(3)
        faces = np.broadcast_to(value, (6, face_size, face_size, 3)).copy()
        return cls.from_faces(faces)


def direction_to_face_uv(dirs):
    """Map directions to (face, u, v); vectorized over leading axes."""
    d = np.asarray(dirs, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    ax, ay, az = np.abs(x), np.abs(y), np.abs(z)

    axis = np.where(ax >= ay, np.where(ax >= az, 0, 2), np.where(ay >= az, 1, 2))
    major = np.choose(axis, [x, y, z])
    ma = np.maximum(np.abs(major), 1e-300)
    face = axis * 2 + (major < 0)

    sc = np.choose(
        face,
        [-z, z, x, x, x, -x],
    )
    tc = np.choose(
        face,
        [-y, -y, z, -z, -y, -y],
    )
    u = (sc / ma + 1.0) * 0.5
    v = (tc / ma + 1.0) * 0.5
    return face, u, v


def face_uv_to_direction(face, u, v):
    """Inverse cube mapping (unnormalized axis component is +-1)."""
    face = np.asarray(face)
    sc = np.asarray(u, dtype=np.float64) * 2.0 - 1.0
    tc = np.asarray(v, dtype=np.float64) * 2.0 - 1.0
    one = np.ones_like(sc)
    x = np.choose(face, [one, -one, sc, sc, sc, -sc])
    y = np.choose(face, [-tc, -tc, one, -one, -tc, -tc])
    z = np.choose(face, [-sc, sc, tc, -tc, one, -one])
    d = np.stack([x, y, z], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def build_mip_chain(cubemap: Cubemap) -> Cubemap:
    """Append 2x2 box-filtered levels down to 1x1 per face."""
    faces = cubemap.mips[0]
    s = faces.shape[1]
    if s < 1 or (s & (s - 1)) != 0:
        raise ValueError(f"face size must be a power of two, got {s}")
    mips = [faces]
    while s > 1:
        prev = mips[-1].astype(np.float64)
        s //= 2
        down = prev.reshape(6, s, 2, s, 2, 3).mean(axis=(2, 4))
        mips.append(down.astype(np.float32))
    cubemap.mips = mips
    return cubemap


def _bilinear_face(mip: np.ndarray, face, u, v):
    """Clamped bilinear fetch inside each face of one mip level."""
    s = mip.shape[1]
    x = np.asarray(u, dtype=np.float64) * s - 0.5
    y = np.asarray(v, dtype=np.float64) * s - 0.5
    x0 = np.clip(np.floor(x).astype(np.int64), 0, s - 1)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, s - 1)
    x1 = np.minimum(x0 + 1, s - 1)
    y1 = np.minimum(y0 + 1, s - 1)
    fx = np.clip(x - x0, 0.0, 1.0)[..., None]
    fy = np.clip(y - y0, 0.0, 1.0)[..., None]
    m = mip.astype(np.float64)
    return (
        m[face, y0, x0] * (1 - fx) * (1 - fy)
        + m[face, y0, x1] * fx * (1 - fy)
        + m[face, y1, x0] * (1 - fx) * fy
        + m[face, y1, x1] * fx * fy
    )


def sample_env(cubemap: Cubemap, dirs, roughness) -> np.ndarray:
    """Roughness-indexed radiance query.

    The mip level is log2(roughness + 1) * lambda_max; the result is bilinear
    within the two bracketing mips and linear across them.
    """
    d = np.asarray(dirs, dtype=np.float64)
    rho = np.clip(np.asarray(roughness, dtype=np.float64), 0.0, 1.0)
    lam = np.log2(rho + 1.0) * cubemap.lambda_max
    lam = np.broadcast_to(lam, d.shape[:-1]).astype(np.float64)

    face, u, v = direction_to_face_uv(d)
    k0 = np.clip(np.floor(lam).astype(np.int64), 0, len(cubemap.mips) - 1)
    k1 = np.minimum(k0 + 1, len(cubemap.mips) - 1)
    frac = np.clip(lam - k0, 0.0, 1.0)[..., None]

    out = np.zeros(d.shape[:-1] + (3,), dtype=np.float64)
    for k in np.unique(k0):
        m = k0 == k
        out[m] += (1.0 - frac[m]) * _bilinear_face(cubemap.mips[k], face[m], u[m], v[m])
    for k in np.unique(k1):
        m = k1 == k
        out[m] += frac[m] * _bilinear_face(cubemap.mips[k], face[m], u[m], v[m])
    return out


def _equirect_lookup(image: np.ndarray, dirs) -> np.ndarray:
    """Bilinear lat-long lookup; +Y is up, +X at the horizontal image center."""
    d = np.asarray(dirs, dtype=np.float64)
    h, w = image.shape[:2]
    phi = np.arctan2(d[..., 2], d[..., 0])
    theta = np.arccos(np.clip(d[..., 1], -1.0, 1.0))
    x = (phi + np.pi) / (2 * np.pi) * w - 0.5
    y = theta / np.pi * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
    fx = (x - x0)[..., None]
    fy = np.clip(y - y0, 0.0, 1.0)[..., None]
    x0 = x0 % w
    x1 = (x0 + 1) % w
    y1 = np.minimum(y0 + 1, h - 1)
    im = image.astype(np.float64)
    return (
        im[y0, x0] * (1 - fx) * (1 - fy)
        + im[y0, x1] * fx * (1 - fy)
        + im[y1, x0] * (1 - fx) * fy
        + im[y1, x1] * fx * fy
    )


def load_equirect(image: np.ndarray, face_size: int) -> Cubemap:
    """Resample a latitude-longitude HDR image into a cubemap."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"equirect image must be HxWx3, got {image.shape}")
    bad = int(np.size(image) - np.isfinite(image).sum())
    if bad:
        raise ValueError(f"equirect image has {bad} non-finite samples")
    if face_size < 1 or (face_size & (face_size - 1)) != 0:
        raise ValueError(f"face size must be a power of two, got {face_size}")

    idx = (np.arange(face_size) + 0.5) / face_size
    u, v = np.meshgrid(idx, idx)
    faces = np.empty((6, face_size, face_size, 3), dtype=np.float32)
    for f in range(6):
        dirs = face_uv_to_direction(np.full(u.shape, f), u, v)
        faces[f] = _equirect_lookup(image, dirs)
    return Cubemap.from_faces(faces)


def load_equirect_pfm(path, face_size: int) -> Cubemap:
    image = read_pfm(path)
    if image.ndim != 3:
        raise ValueError("environment PFM must be RGB")
    return load_equirect(image, face_size)


def yaw_matrix(yaw: float) -> np.ndarray:
    """Rotation applied to sampling directions for an environment yawed about +Y."""
    c, s = np.cos(-yaw), np.sin(-yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]], dtype=np.float64)


def dump_faces(cubemap: Cubemap, directory, prefix: str = "env"):
    """Write each mip-0 face as a PFM for inspection; returns the paths."""
    import os

    paths = []
    for f, name in enumerate(_FACE_NAMES):
        path = os.path.join(directory, f"{prefix}_{name}.pfm")
        write_pfm(cubemap.faces[f], path)
        paths.append(path)
    return paths
