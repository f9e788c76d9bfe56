"""Pure-numpy kernel backend.

Vectorized over pixels/rays but semantically identical to the compiled core:
same accumulation order, same stop rules, same RNG streams.
"""

from __future__ import annotations

import numpy as np

from .. import brdf as _brdf
from .. import envlight as _env
from ..rng import uniform
from .common import sample_keys

NAME = "numpy"


def rasterize_core(mean2d, conic, radius, opacity, channels, width, height,
                   alpha_clamp, t_stop, q_max):
    """Front-to-back alpha compositing; inputs are pre-sorted by depth.

    Returns (channel image (H, W, C) float64, accumulated alpha (H, W)).
    """
    n, c = channels.shape
    out = np.zeros((height, width, c), dtype=np.float64)
    trans = np.ones((height, width), dtype=np.float64)

    for i in range(n):
        mx, my = mean2d[i]
        r = radius[i]
        x0 = max(int(np.floor(mx - r)), 0)
        x1 = min(int(np.ceil(mx + r)) + 1, width)
        y0 = max(int(np.floor(my - r)), 0)
        y1 = min(int(np.ceil(my + r)) + 1, height)
        if x0 >= x1 or y0 >= y1:
            continue
        dx = np.arange(x0, x1, dtype=np.float64) - mx
        dy = np.arange(y0, y1, dtype=np.float64)[:, None] - my
        a, b, cc = conic[i]
        q = a * dx * dx + 2.0 * b * dx * dy + cc * dy * dy
        t_blk = trans[y0:y1, x0:x1]
        live = (q <= q_max) & (t_blk >= t_stop)
        alpha = np.minimum(opacity[i] * np.exp(-0.5 * q), alpha_clamp)
        w = np.where(live, t_blk * alpha, 0.0)
        out[y0:y1, x0:x1] += w[:, :, None] * channels[i]
        trans[y0:y1, x0:x1] = np.where(live, t_blk * (1.0 - alpha), t_blk)

    return out, 1.0 - trans


def trace_rays_core(depth, cam, origins, dirs, step_size, max_len, thickness):
    """March rays in world space against the composited depth buffer.

    Lockstep over all rays with an active mask. Returns (hit uint8, uv, dist);
    uv is (-1, -1) on miss and dist is the length marched before termination.
    """
    m = len(origins)
    r_cw, pos = cam["r_cw"], cam["pos"]
    fx, fy, cx, cy = cam["fx"], cam["fy"], cam["cx"], cam["cy"]
    width, height, near = cam["width"], cam["height"], cam["near"]

    hit = np.zeros(m, dtype=np.uint8)
    uv_out = np.full((m, 2), -1.0)
    dist_out = np.zeros(m)

    oc = (origins - pos) @ r_cw.T
    z0 = oc[:, 2]
    u0 = fx * oc[:, 0] / np.maximum(z0, 1e-12) + cx
    v0 = fy * oc[:, 1] / np.maximum(z0, 1e-12) + cy
    opx = np.floor(u0 + 0.5).astype(np.int64)
    opy = np.floor(v0 + 0.5).astype(np.int64)
    origin_inside = (opx >= 0) & (opx < width) & (opy >= 0) & (opy < height)
    guard = np.zeros(m, dtype=bool)
    inside = np.nonzero(origin_inside)[0]
    guard[inside] = (
        np.abs(depth[opy[inside], opx[inside]].astype(np.float64) - z0[inside]) <= thickness
    )

    active = np.arange(m)
    prev_dz = np.zeros(m)
    n_steps = int(np.floor(max_len / step_size + 1e-9))
    for k in range(1, n_steps + 1):
        if len(active) == 0:
            break
        t = k * step_size
        p = origins[active] + t * dirs[active]
        pc = (p - pos) @ r_cw.T
        z = pc[:, 2]
        behind = z < near
        zs = np.maximum(z, 1e-12)
        u = fx * pc[:, 0] / zs + cx
        v = fy * pc[:, 1] / zs + cy
        px = np.floor(u + 0.5).astype(np.int64)
        py = np.floor(v + 0.5).astype(np.int64)
        off = behind | (px < 0) | (px >= width) | (py < 0) | (py >= height)

        dist_out[active] = t
        if off.any():
            keep = ~off
            active, p, z, u, v, px, py = (
                active[keep], p[keep], z[keep], u[keep], v[keep], px[keep], py[keep],
            )
            if len(active) == 0:
                break

        z_scene = depth[py, px].astype(np.float64)
        empty = z_scene <= 0.0
        skip = guard[active] & (px == opx[active]) & (py == opy[active])

        dz = z - z_scene
        found = ~empty & ~skip & (prev_dz[active] <= 0.0) & (dz > 0.0) & (dz <= thickness)
        if found.any():
            idx = active[found]
            hit[idx] = 1
            uv_out[idx, 0] = u[found]
            uv_out[idx, 1] = v[found]
            dist_out[idx] = t

        tested = ~empty & ~skip
        prev_dz[active[tested]] = dz[tested]

        keep = ~empty & ~found
        active = active[keep]

    return hit, uv_out, dist_out


def _bilinear_image(img, u, v):
    h, w = img.shape[:2]
    x = np.clip(np.asarray(u, dtype=np.float64), 0.0, w - 1.0)
    y = np.clip(np.asarray(v, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fxw = (x - x0)[..., None]
    fyw = (y - y0)[..., None]
    im = img.astype(np.float64)
    return (
        im[y0, x0] * (1 - fxw) * (1 - fyw)
        + im[y0, x1] * fxw * (1 - fyw)
        + im[y1, x0] * (1 - fxw) * fyw
        + im[y1, x1] * fxw * fyw
    )


def ssr_core(depth, origins, w_o_img, normal, albedo, rough, metal, mask,
             c1, env_mip0, env_rot, cam, n_samples, step_size, max_len,
             thickness, seed, rho_min):
    """Monte-Carlo one-bounce specular estimate per shadeable pixel.

    Returns (c_sp (H, W, 3), hit_count (H, W) int32, valid_count (H, W) int32).
    Horizon-clipped samples contribute zero; the sum divides by n_samples.
    """
    h, w = depth.shape
    c_sp = np.zeros((h, w, 3), dtype=np.float64)
    hit_count = np.zeros((h, w), dtype=np.int32)
    valid_count = np.zeros((h, w), dtype=np.int32)

    pix = np.nonzero(mask.ravel())[0]
    p = len(pix)
    if p == 0:
        return c_sp, hit_count, valid_count

    keys = sample_keys(pix, n_samples)
    u1 = uniform(seed, keys, 0)
    u2 = uniform(seed, keys, 1)

    n_vec = normal.reshape(-1, 3)[pix][:, None, :]
    w_o = w_o_img.reshape(-1, 3)[pix][:, None, :]
    rho = np.clip(rough.reshape(-1)[pix], rho_min, 1.0)[:, None]
    mat = _brdf.MaterialParams(
        albedo=albedo.reshape(-1, 3)[pix][:, None, :],
        roughness=rho,
        metallic=metal.reshape(-1)[pix][:, None],
    )

    w_i, pdf, valid = _brdf.sample_ggx(w_o, n_vec, rho, u1, u2)
    _, f_s = _brdf.eval_brdf(w_i, w_o, n_vec, mat)
    cos_i = np.sum(w_i * n_vec, axis=-1)

    flat_valid = valid.ravel()
    o_rep = np.repeat(origins.reshape(-1, 3)[pix], n_samples, axis=0)[flat_valid]
    d_flat = w_i.reshape(-1, 3)[flat_valid]
    hit, uv, _ = trace_rays_core(depth, cam, o_rep, d_flat, step_size, max_len, thickness)

    radiance = np.zeros((flat_valid.sum(), 3), dtype=np.float64)
    hm = hit.astype(bool)
    if hm.any():
        radiance[hm] = _bilinear_image(c1, uv[hm, 0], uv[hm, 1])
    if (~hm).any():
        d_env = d_flat[~hm] @ env_rot.T
        face, fu, fv = _env.direction_to_face_uv(d_env)
        radiance[~hm] = _env._bilinear_face(env_mip0, face, fu, fv)

    c1_samp = np.zeros((p, n_samples, 3), dtype=np.float64)
    c1_samp.reshape(-1, 3)[flat_valid] = radiance

    weight = np.where(valid, cos_i / pdf, 0.0)
    contrib = (f_s * c1_samp * weight[..., None]).sum(axis=1) / n_samples

    rows, cols = np.divmod(pix, w)
    c_sp[rows, cols] = contrib
    hits_per_pix = np.zeros((p, n_samples), dtype=np.int32)
    hits_per_pix.reshape(-1)[flat_valid] = hit
    hit_count[rows, cols] = hits_per_pix.sum(axis=1)
    valid_count[rows, cols] = valid.sum(axis=1)
    return c_sp, hit_count, valid_count
