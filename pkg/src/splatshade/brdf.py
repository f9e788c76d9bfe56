"""Microfacet BRDF: GGX evaluation, importance sampling, and the split-sum LUT.

All functions broadcast over leading axes; direction vectors live on the last
axis (size 3). Roughness parameterizes the GGX width directly (no squaring)
and is floored at ``RHO_MIN`` wherever a division could degenerate.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .rng import uniform

RHO_MIN = 0.01
DIELECTRIC_F0 = 0.04
LUT_MAGIC = b"SSLUT1"


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _normalize(v, eps=1e-12):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.maximum(n, eps)


@dataclass
class MaterialParams:
    """Surface material: RGB albedo, roughness, metallic, all clamped to [0,1].

    Fields may be scalars or arrays (albedo with a trailing axis of 3), so a
    whole image of materials can be evaluated in one call.
    """

    albedo: np.ndarray
    roughness: np.ndarray
    metallic: np.ndarray

    def __post_init__(self):
        self.albedo = np.clip(np.asarray(self.albedo, dtype=np.float64), 0.0, 1.0)
        self.roughness = np.clip(np.asarray(self.roughness, dtype=np.float64), 0.0, 1.0)
        self.metallic = np.clip(np.asarray(self.metallic, dtype=np.float64), 0.0, 1.0)


def ggx_ndf(cos_hn, roughness):
    """GGX normal distribution for half-vector cosine ``cos_hn``."""
    rho = np.maximum(np.asarray(roughness, dtype=np.float64), RHO_MIN)
    c = np.asarray(cos_hn, dtype=np.float64)
    r2 = rho * rho
    d = c * c * (r2 - 1.0) + 1.0
    return r2 / (np.pi * d * d)


def fresnel_schlick(cos_vh, f0):
    """Schlick reflectance; rises from f0 at normal incidence to 1 at grazing."""
    c = np.clip(np.asarray(cos_vh, dtype=np.float64), 0.0, 1.0)
    f0 = np.asarray(f0, dtype=np.float64)
    if f0.ndim >= 1:  # f0 carries a trailing channel axis
        c = c[..., None]
    return f0 + (1.0 - f0) * (1.0 - c) ** 5


def f0_from_material(albedo, metallic):
    """Base reflectance: 0.04 for dielectrics, albedo for metals."""
    a = np.asarray(albedo, dtype=np.float64)
    m = np.asarray(metallic, dtype=np.float64)[..., None]
    return DIELECTRIC_F0 + (a - DIELECTRIC_F0) * m


def _g1(z, rho):
    return 2.0 * z / (z + np.sqrt(rho * rho + (1.0 - rho * rho) * z * z))


def smith_geometry(cos_in, cos_on, roughness):
    """Separable Smith shadowing/masking term, in [0, 1]."""
    rho = np.asarray(roughness, dtype=np.float64)
    ci = np.clip(np.asarray(cos_in, dtype=np.float64), 1e-9, 1.0)
    co = np.clip(np.asarray(cos_on, dtype=np.float64), 1e-9, 1.0)
    return _g1(ci, rho) * _g1(co, rho)


def eval_brdf(w_i, w_o, n, mat: MaterialParams):
    """Evaluate the diffuse and specular lobes.

    Directions point away from the surface; the caller guarantees
    ``w_i . n > 0`` and ``w_o . n > 0``. Returns (f_d, f_s) as RGB triples.
    A degenerate half vector (w_i == -w_o) yields zero specular.
    """
    w_i = np.asarray(w_i, dtype=np.float64)
    w_o = np.asarray(w_o, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    rho = np.maximum(mat.roughness, RHO_MIN)

    f_d = ((1.0 - mat.metallic) / np.pi)[..., None] * mat.albedo

    h_raw = w_i + w_o
    h_len = np.linalg.norm(h_raw, axis=-1, keepdims=True)
    degenerate = h_len[..., 0] < 1e-9
    h = h_raw / np.maximum(h_len, 1e-12)

    cos_in = np.clip(_dot(w_i, n), 1e-9, 1.0)
    cos_on = np.clip(_dot(w_o, n), 1e-9, 1.0)
    cos_hn = np.clip(_dot(h, n), 0.0, 1.0)
    cos_vh = np.clip(_dot(w_o, h), 0.0, 1.0)

    d = ggx_ndf(cos_hn, rho)
    f = fresnel_schlick(cos_vh, f0_from_material(mat.albedo, mat.metallic))
    g = smith_geometry(cos_in, cos_on, rho)
    f_s = (d * g / (4.0 * cos_in * cos_on))[..., None] * f
    f_s = np.where(degenerate[..., None], 0.0, f_s)

    shape = np.broadcast_shapes(f_d.shape, f_s.shape)
    return np.broadcast_to(f_d, shape).copy(), np.broadcast_to(f_s, shape).copy()


def _tangent_frame(n):
    """Orthonormal (t, b) completing n. Matches the compiled kernel."""
    n = np.asarray(n, dtype=np.float64)
    up = np.where(
        (np.abs(n[..., 2:3]) < 0.999),
        np.broadcast_to(np.array([0.0, 0.0, 1.0]), n.shape),
        np.broadcast_to(np.array([1.0, 0.0, 0.0]), n.shape),
    )
    t = _normalize(np.cross(up, n))
    b = np.cross(n, t)
    return t, b


def sample_ggx(w_o, n, roughness, u1, u2):
    """Draw a reflection direction by GGX half-vector importance sampling.

    Returns (w_i, pdf, valid). ``pdf`` is the solid-angle density
    D(h.n) (h.n) / (4 (w_o.h)) of the reflected direction. Samples reflected
    below the horizon (w_i.n <= 0) are flagged invalid; the caller skips them.
    """
    w_o = np.asarray(w_o, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    rho = np.clip(np.asarray(roughness, dtype=np.float64), RHO_MIN, 1.0)
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)

    cos_h = np.sqrt((1.0 - u1) / (1.0 + (rho * rho - 1.0) * u1))
    sin_h = np.sqrt(np.clip(1.0 - cos_h * cos_h, 0.0, None))
    phi = 2.0 * np.pi * u2

    t, b = _tangent_frame(n)
    h = (
        (sin_h * np.cos(phi))[..., None] * t
        + (sin_h * np.sin(phi))[..., None] * b
        + cos_h[..., None] * n
    )

    cos_vh = _dot(w_o, h)
    w_i = 2.0 * cos_vh[..., None] * h - w_o
    valid = (_dot(w_i, n) > 0.0) & (cos_vh > 1e-9)

    d = ggx_ndf(np.clip(_dot(h, n), 0.0, 1.0), rho)
    pdf = d * np.clip(_dot(h, n), 0.0, 1.0) / np.maximum(4.0 * cos_vh, 1e-12)
    pdf = np.maximum(pdf, 1e-300)
    return w_i, pdf, valid


@dataclass
class BrdfLut:
    """Split-sum lookup table over (cos(n.v), roughness).

    ``data[i, j]`` holds (scale, bias) at cos = (i + 0.5)/N, rho = (j + 0.5)/N;
    the specular environment response is f0 * scale + bias.
    """

    resolution: int
    data: np.ndarray  # (N, N, 2) float32

    def validate(self):
        n = self.resolution
        if self.data.shape != (n, n, 2):
            raise ValueError(f"LUT data shape {self.data.shape} != ({n},{n},2)")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("LUT contains non-finite entries")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ValueError("LUT entries outside [0,1]")
        if (self.data[..., 0] + self.data[..., 1]).max() > 1.0 + 1e-3:
            raise ValueError("LUT violates scale + bias <= 1 + 1e-3")

    def save(self, path):
        with open(path, "wb") as f:
            f.write(LUT_MAGIC)
            f.write(struct.pack("<I", self.resolution))
            f.write(self.data.astype("<f4").tobytes())

    @classmethod
    def load(cls, path) -> "BrdfLut":
        with open(path, "rb") as f:
            magic = f.read(6)
            if magic != LUT_MAGIC:
                raise ValueError(f"bad LUT magic {magic!r}")
            (n,) = struct.unpack("<I", f.read(4))
            payload = f.read(n * n * 2 * 4)
            if len(payload) != n * n * 2 * 4:
                raise ValueError("truncated LUT payload")
        data = np.frombuffer(payload, dtype="<f4").reshape(n, n, 2).copy()
        lut = cls(resolution=n, data=data)
        lut.validate()
        return lut


def _split_sum_weights(cos_nv, rho, u1, u2):
    """Per-sample (scale, bias) weights of the split integrals.

    Tangent space with n = +z and v in the xz plane; invalid samples weigh 0.
    """
    cos_h = np.sqrt((1.0 - u1) / (1.0 + (rho * rho - 1.0) * u1))
    sin_h = np.sqrt(np.clip(1.0 - cos_h * cos_h, 0.0, None))
    phi = 2.0 * np.pi * u2
    hx = sin_h * np.cos(phi)
    hz = cos_h

    sin_nv = np.sqrt(max(0.0, 1.0 - cos_nv * cos_nv))
    cos_vh = hx * sin_nv + hz * cos_nv
    # w_i = 2 (v.h) h - v
    cos_in = 2.0 * cos_vh * cos_h - cos_nv
    valid = (cos_in > 0.0) & (cos_vh > 1e-9)

    g = smith_geometry(np.clip(cos_in, 1e-9, 1.0), cos_nv, rho)
    g_vis = g * cos_vh / np.maximum(cos_h * cos_nv, 1e-12)
    fc = (1.0 - np.clip(cos_vh, 0.0, 1.0)) ** 5
    w_scale = np.where(valid, g_vis * (1.0 - fc), 0.0)
    w_bias = np.where(valid, g_vis * fc, 0.0)
    return w_scale, w_bias


def precompute_brdf_lut(resolution: int = 64, samples_per_entry: int = 1024, seed: int = 0) -> BrdfLut:
    """Estimate the two split integrals per (cos, rho) entry by importance-
    sampled Monte Carlo. Deterministic for a given seed.

    Horizon-clipped samples contribute zero and the sum divides by the full
    sample count, so each entry is an unbiased estimate of its integral.
    """
    if resolution < 16:
        raise ValueError("LUT resolution must be >= 16")
    if samples_per_entry < 256:
        raise ValueError("samples_per_entry must be >= 256")

    n = resolution
    data = np.empty((n, n, 2), dtype=np.float64)
    sample_idx = np.arange(samples_per_entry, dtype=np.uint64)
    for i in range(n):
        cos_nv = (i + 0.5) / n
        for j in range(n):
            rho = max((j + 0.5) / n, RHO_MIN)
            key = np.uint64((i * n + j) * samples_per_entry) + sample_idx
            u1 = uniform(seed, key, 0)
            u2 = uniform(seed, key, 1)
            w_scale, w_bias = _split_sum_weights(cos_nv, rho, u1, u2)
            data[i, j, 0] = w_scale.sum() / samples_per_entry
            data[i, j, 1] = w_bias.sum() / samples_per_entry

    # The true integrals live in {s, b >= 0, s + b <= 1}; projecting the
    # estimates onto that set never increases their error and keeps the
    # energy invariant exact even where grazing-angle variance is large.
    data = np.clip(data, 0.0, 1.0)
    excess = data[..., 0] + data[..., 1] - 1.0
    over = excess > 0
    if over.any():
        shift = np.where(over, excess * 0.5, 0.0)
        data[..., 0] = np.clip(data[..., 0] - shift, 0.0, 1.0)
        data[..., 1] = np.clip(data[..., 1] - shift, 0.0, 1.0)

    lut = BrdfLut(resolution=n, data=data.astype(np.float32))
    lut.validate()
    return lut


def lookup_brdf(lut: BrdfLut, cos_nv, roughness, f0):
    """Bilinear LUT lookup with edge clamping: F_s = f0 * scale + bias."""
    n = lut.resolution
    x = np.clip(np.asarray(cos_nv, dtype=np.float64), 0.0, 1.0) * n - 0.5
    y = np.clip(np.asarray(roughness, dtype=np.float64), 0.0, 1.0) * n - 0.5
    x0 = np.clip(np.floor(x).astype(np.int64), 0, n - 1)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, n - 1)
    x1 = np.minimum(x0 + 1, n - 1)
    y1 = np.minimum(y0 + 1, n - 1)
    fx = np.clip(x - x0, 0.0, 1.0)
    fy = np.clip(y - y0, 0.0, 1.0)

    d = lut.data.astype(np.float64)
    v = (
        d[x0, y0] * ((1 - fx) * (1 - fy))[..., None]
        + d[x1, y0] * (fx * (1 - fy))[..., None]
        + d[x0, y1] * ((1 - fx) * fy)[..., None]
        + d[x1, y1] * (fx * fy)[..., None]
    )
    scale, bias = v[..., 0], v[..., 1]
    return np.asarray(f0, dtype=np.float64) * scale[..., None] + bias[..., None]
