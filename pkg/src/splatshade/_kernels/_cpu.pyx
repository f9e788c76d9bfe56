# Compiled hot kernels: tile-binned splat compositing, screen-space ray
# marching, and the Monte-Carlo specular gather. Bit-level RNG and all
# clamp/stop rules mirror np_impl so the two backends agree to float32.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, floor, ceil, cos, sin, pow

cnp.import_array()

ctypedef unsigned long long u64

cdef double PI = 3.141592653589793
cdef double INV_2POW53 = 1.0 / 9007199254740992.0


cdef inline u64 _mix(u64 z) nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9ULL
    z ^= z >> 27
    z *= 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(u64 seed, u64 key, u64 dim) nogil:
    cdef u64 z = seed + 0x9E3779B97F4A7C15ULL * key
    z = _mix(_mix(z) + 0xD1B54A32D192ED03ULL * (dim + 1ULL))
    return <double>(z >> 11) * INV_2POW53


cdef inline double _clamp(double x, double lo, double hi) nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef inline double _ggx_ndf(double cos_hn, double rho) nogil:
    cdef double r2 = rho * rho
    cdef double d = cos_hn * cos_hn * (r2 - 1.0) + 1.0
    return r2 / (PI * d * d)


cdef inline double _g1(double z, double rho) nogil:
    return 2.0 * z / (z + sqrt(rho * rho + (1.0 - rho * rho) * z * z))


# ---------------------------------------------------------------------------
# rasterization

def rasterize_core(double[:, ::1] mean2d, double[:, ::1] conic,
                   double[::1] radius, double[::1] opacity,
                   double[:, ::1] channels, int width, int height,
                   double alpha_clamp, double t_stop, double q_max):
    cdef int n = mean2d.shape[0]
    cdef int c = channels.shape[1]
    if c > 16:
        raise ValueError("too many channels for the compiled kernel")

    out_np = np.zeros((height, width, c), dtype=np.float64)
    alpha_np = np.zeros((height, width), dtype=np.float64)
    cdef double[:, :, ::1] out = out_np
    cdef double[:, ::1] accum = alpha_np

    cdef int tile = 16
    cdef int tx_n = (width + tile - 1) // tile
    cdef int ty_n = (height + tile - 1) // tile
    cdef int n_tiles = tx_n * ty_n

    # bin splats into tiles, preserving the depth-sorted input order
    counts_np = np.zeros(n_tiles + 1, dtype=np.int64)
    cdef long long[::1] counts = counts_np
    cdef int i, tx, ty, tx0, tx1, ty0, ty1, x0, x1, y0, y1
    cdef double mx, my, r
    for i in range(n):
        mx = mean2d[i, 0]; my = mean2d[i, 1]; r = radius[i]
        x0 = <int>floor(mx - r); x1 = <int>ceil(mx + r)
        y0 = <int>floor(my - r); y1 = <int>ceil(my + r)
        if x0 < 0: x0 = 0
        if y0 < 0: y0 = 0
        if x1 > width - 1: x1 = width - 1
        if y1 > height - 1: y1 = height - 1
        if x0 > x1 or y0 > y1:
            continue
        tx0 = x0 // tile; tx1 = x1 // tile
        ty0 = y0 // tile; ty1 = y1 // tile
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                counts[ty * tx_n + tx + 1] += 1

    offsets_np = np.cumsum(counts_np)
    cdef long long[::1] offsets = offsets_np
    lists_np = np.zeros(offsets_np[n_tiles], dtype=np.int64)
    cdef long long[::1] lists = lists_np
    fill_np = offsets_np[:-1].copy()
    cdef long long[::1] fill = fill_np
    cdef long long t_idx
    for i in range(n):
        mx = mean2d[i, 0]; my = mean2d[i, 1]; r = radius[i]
        x0 = <int>floor(mx - r); x1 = <int>ceil(mx + r)
        y0 = <int>floor(my - r); y1 = <int>ceil(my + r)
        if x0 < 0: x0 = 0
        if y0 < 0: y0 = 0
        if x1 > width - 1: x1 = width - 1
        if y1 > height - 1: y1 = height - 1
        if x0 > x1 or y0 > y1:
            continue
        tx0 = x0 // tile; tx1 = x1 // tile
        ty0 = y0 // tile; ty1 = y1 // tile
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                t_idx = ty * tx_n + tx
                lists[fill[t_idx]] = i
                fill[t_idx] += 1

    cdef int px, py, j, k
    cdef long long s, s0, s1
    cdef double trans, q, a, dx, dy, wgt
    cdef double acc[16]
    with nogil:
        for ty in range(ty_n):
            for tx in range(tx_n):
                t_idx = ty * tx_n + tx
                s0 = offsets[t_idx]; s1 = offsets[t_idx + 1]
                if s0 == s1:
                    continue
                y0 = ty * tile
                y1 = y0 + tile
                if y1 > height: y1 = height
                x0 = tx * tile
                x1 = x0 + tile
                if x1 > width: x1 = width
                for py in range(y0, y1):
                    for px in range(x0, x1):
                        trans = 1.0
                        for j in range(c):
                            acc[j] = 0.0
                        for s in range(s0, s1):
                            i = <int>lists[s]
                            dx = px - mean2d[i, 0]
                            dy = py - mean2d[i, 1]
                            q = conic[i, 0] * dx * dx + 2.0 * conic[i, 1] * dx * dy \
                                + conic[i, 2] * dy * dy
                            if q > q_max:
                                continue
                            a = opacity[i] * exp(-0.5 * q)
                            if a > alpha_clamp:
                                a = alpha_clamp
                            wgt = trans * a
                            for j in range(c):
                                acc[j] += wgt * channels[i, j]
                            trans *= (1.0 - a)
                            if trans < t_stop:
                                break
                        for j in range(c):
                            out[py, px, j] = acc[j]
                        accum[py, px] = 1.0 - trans

    return out_np, alpha_np


# ---------------------------------------------------------------------------
# screen-space ray marching

cdef inline int _trace_one(float[:, ::1] depth,
                           double[:, ::1] r_cw, double* pos,
                           double fx, double fy, double cx, double cy,
                           int width, int height, double near,
                           double ox, double oy, double oz,
                           double dx, double dy, double dz,
                           double step_size, int n_steps, double thickness,
                           int guard, int opx, int opy,
                           double* out_u, double* out_v, double* out_t) nogil:
    """Returns 1 on hit, 0 on miss; out_t is the marched length either way."""
    cdef double prev_dz = 0.0
    cdef double t, px_w, py_w, pz_w, xc, yc, zc, u, v, z_scene, delta
    cdef int k, px, py
    out_u[0] = -1.0
    out_v[0] = -1.0
    out_t[0] = 0.0
    for k in range(1, n_steps + 1):
        t = k * step_size
        out_t[0] = t
        px_w = ox + t * dx - pos[0]
        py_w = oy + t * dy - pos[1]
        pz_w = oz + t * dz - pos[2]
        xc = r_cw[0, 0] * px_w + r_cw[0, 1] * py_w + r_cw[0, 2] * pz_w
        yc = r_cw[1, 0] * px_w + r_cw[1, 1] * py_w + r_cw[1, 2] * pz_w
        zc = r_cw[2, 0] * px_w + r_cw[2, 1] * py_w + r_cw[2, 2] * pz_w
        if zc < near:
            return 0
        u = fx * xc / zc + cx
        v = fy * yc / cz_guard(zc) + cy
        px = <int>floor(u + 0.5)
        py = <int>floor(v + 0.5)
        if px < 0 or px >= width or py < 0 or py >= height:
            return 0
        z_scene = depth[py, px]
        if z_scene <= 0.0:
            return 0
        if guard and px == opx and py == opy:
            continue
        delta = zc - z_scene
        if prev_dz <= 0.0 and delta > 0.0 and delta <= thickness:
            out_u[0] = u
            out_v[0] = v
            return 1
        prev_dz = delta
    return 0


cdef inline double cz_guard(double z) nogil:
    return z if z > 1e-12 else 1e-12


def trace_rays_core(float[:, ::1] depth, dict cam,
                    double[:, ::1] origins, double[:, ::1] dirs,
                    double step_size, double max_len, double thickness):
    cdef double[:, ::1] r_cw = cam["r_cw"]
    cdef double[::1] pos_v = cam["pos"]
    cdef double pos[3]
    pos[0] = pos_v[0]; pos[1] = pos_v[1]; pos[2] = pos_v[2]
    cdef double fx = cam["fx"], fy = cam["fy"], cx = cam["cx"], cy = cam["cy"]
    cdef int width = cam["width"], height = cam["height"]
    cdef double near = cam["near"]

    cdef int m = origins.shape[0]
    cdef int n_steps = <int>floor(max_len / step_size + 1e-9)

    hit_np = np.zeros(m, dtype=np.uint8)
    uv_np = np.full((m, 2), -1.0)
    dist_np = np.zeros(m)
    cdef unsigned char[::1] hit = hit_np
    cdef double[:, ::1] uv = uv_np
    cdef double[::1] dist = dist_np

    cdef int i, opx, opy, guard
    cdef double xc, yc, zc, u0, v0, ou, ov, ot, z0
    with nogil:
        for i in range(m):
            xc = r_cw[0, 0] * (origins[i, 0] - pos[0]) + r_cw[0, 1] * (origins[i, 1] - pos[1]) + r_cw[0, 2] * (origins[i, 2] - pos[2])
            yc = r_cw[1, 0] * (origins[i, 0] - pos[0]) + r_cw[1, 1] * (origins[i, 1] - pos[1]) + r_cw[1, 2] * (origins[i, 2] - pos[2])
            zc = r_cw[2, 0] * (origins[i, 0] - pos[0]) + r_cw[2, 1] * (origins[i, 1] - pos[1]) + r_cw[2, 2] * (origins[i, 2] - pos[2])
            z0 = zc
            u0 = fx * xc / cz_guard(zc) + cx
            v0 = fy * yc / cz_guard(zc) + cy
            opx = <int>floor(u0 + 0.5)
            opy = <int>floor(v0 + 0.5)
            guard = 0
            if 0 <= opx < width and 0 <= opy < height:
                if fabs(<double>depth[opy, opx] - z0) <= thickness:
                    guard = 1
            hit[i] = <unsigned char>_trace_one(
                depth, r_cw, pos, fx, fy, cx, cy, width, height, near,
                origins[i, 0], origins[i, 1], origins[i, 2],
                dirs[i, 0], dirs[i, 1], dirs[i, 2],
                step_size, n_steps, thickness, guard, opx, opy, &ou, &ov, &ot)
            uv[i, 0] = ou
            uv[i, 1] = ov
            dist[i] = ot

    return hit_np, uv_np, dist_np


# ---------------------------------------------------------------------------
# environment fetch (mip 0) and bilinear image fetch

cdef inline void _env_sample_mip0(float[:, :, :, ::1] faces,
                                  double x, double y, double z,
                                  double* out) nogil:
    cdef double ax = fabs(x), ay = fabs(y), az = fabs(z)
    cdef int axis
    cdef double major, sc, tc, ma, u, v
    if ax >= ay and ax >= az:
        axis = 0; major = x
    elif ay >= az:
        axis = 1; major = y
    else:
        axis = 2; major = z
    cdef int face = axis * 2 + (1 if major < 0 else 0)
    if face == 0:
        sc = -z; tc = -y
    elif face == 1:
        sc = z; tc = -y
    elif face == 2:
        sc = x; tc = z
    elif face == 3:
        sc = x; tc = -z
    elif face == 4:
        sc = x; tc = -y
    else:
        sc = -x; tc = -y
    ma = fabs(major)
    if ma < 1e-300:
        ma = 1e-300
    u = (sc / ma + 1.0) * 0.5
    v = (tc / ma + 1.0) * 0.5

    cdef int s = faces.shape[1]
    cdef double xf = u * s - 0.5
    cdef double yf = v * s - 0.5
    cdef int x0 = <int>floor(xf)
    cdef int y0 = <int>floor(yf)
    if x0 < 0: x0 = 0
    if x0 > s - 1: x0 = s - 1
    if y0 < 0: y0 = 0
    if y0 > s - 1: y0 = s - 1
    cdef int x1 = x0 + 1 if x0 + 1 < s else s - 1
    cdef int y1 = y0 + 1 if y0 + 1 < s else s - 1
    cdef double fxw = _clamp(xf - x0, 0.0, 1.0)
    cdef double fyw = _clamp(yf - y0, 0.0, 1.0)
    cdef int ch
    for ch in range(3):
        out[ch] = (faces[face, y0, x0, ch] * (1 - fxw) * (1 - fyw)
                   + faces[face, y0, x1, ch] * fxw * (1 - fyw)
                   + faces[face, y1, x0, ch] * (1 - fxw) * fyw
                   + faces[face, y1, x1, ch] * fxw * fyw)


cdef inline void _bilinear_rgb(float[:, :, ::1] img, double u, double v,
                               double* out) nogil:
    cdef int h = img.shape[0], w = img.shape[1]
    cdef double x = _clamp(u, 0.0, w - 1.0)
    cdef double y = _clamp(v, 0.0, h - 1.0)
    cdef int x0 = <int>floor(x)
    cdef int y0 = <int>floor(y)
    if x0 > w - 1: x0 = w - 1
    if y0 > h - 1: y0 = h - 1
    cdef int x1 = x0 + 1 if x0 + 1 < w else w - 1
    cdef int y1 = y0 + 1 if y0 + 1 < h else h - 1
    cdef double fxw = x - x0
    cdef double fyw = y - y0
    cdef int ch
    for ch in range(3):
        out[ch] = (img[y0, x0, ch] * (1 - fxw) * (1 - fyw)
                   + img[y0, x1, ch] * fxw * (1 - fyw)
                   + img[y1, x0, ch] * (1 - fxw) * fyw
                   + img[y1, x1, ch] * fxw * fyw)


# ---------------------------------------------------------------------------
# Monte-Carlo indirect specular

def ssr_core(float[:, ::1] depth, double[:, :, ::1] origins,
             double[:, :, ::1] w_o_img, float[:, :, ::1] normal,
             float[:, :, ::1] albedo, float[:, ::1] rough,
             float[:, ::1] metal, cnp.uint8_t[:, ::1] mask,
             float[:, :, ::1] c1, float[:, :, :, ::1] env_mip0,
             double[:, ::1] env_rot, dict cam,
             int n_samples, double step_size, double max_len,
             double thickness, u64 seed, double rho_min):
    cdef double[:, ::1] r_cw = cam["r_cw"]
    cdef double[::1] pos_v = cam["pos"]
    cdef double pos[3]
    pos[0] = pos_v[0]; pos[1] = pos_v[1]; pos[2] = pos_v[2]
    cdef double fx = cam["fx"], fy = cam["fy"], cx = cam["cx"], cy = cam["cy"]
    cdef int width = cam["width"], height = cam["height"]
    cdef double near = cam["near"]
    cdef int n_steps = <int>floor(max_len / step_size + 1e-9)

    cdef int h = depth.shape[0], w = depth.shape[1]
    out_np = np.zeros((h, w, 3), dtype=np.float64)
    hits_np = np.zeros((h, w), dtype=np.int32)
    valid_np = np.zeros((h, w), dtype=np.int32)
    cdef double[:, :, ::1] out = out_np
    cdef int[:, ::1] hits = hits_np
    cdef int[:, ::1] valids = valid_np

    cdef int py, px, s, ch, opx, opy, guard, is_hit, nv_ok
    cdef u64 key
    cdef double u1, u2, rho, cos_h, sin_h, phi
    cdef double nx, ny, nz, tx, ty, tz, bx, by, bz, ux, uy, uz, ulen
    cdef double hx, hy, hz, wox, woy, woz, wix, wiy, wiz
    cdef double cos_vh, cos_in, cos_on, cos_hn, d_ndf, pdf, g, fc
    cdef double f0r, f0g, f0b, alb_r, alb_g, alb_b, met
    cdef double ox, oy, oz, z0, xc, yc, zc, u0, v0
    cdef double hu, hv, ht, weight, spec_common
    cdef double rad[3]
    cdef double acc[3]
    cdef double ex, ey, ez
    cdef double hlx, hly, hlz, hlen

    with nogil:
        for py in range(h):
            for px in range(w):
                if mask[py, px] == 0:
                    continue
                nx = normal[py, px, 0]; ny = normal[py, px, 1]; nz = normal[py, px, 2]
                wox = w_o_img[py, px, 0]; woy = w_o_img[py, px, 1]; woz = w_o_img[py, px, 2]
                rho = rough[py, px]
                if rho < rho_min: rho = rho_min
                if rho > 1.0: rho = 1.0
                alb_r = albedo[py, px, 0]; alb_g = albedo[py, px, 1]; alb_b = albedo[py, px, 2]
                met = metal[py, px]
                f0r = 0.04 + (alb_r - 0.04) * met
                f0g = 0.04 + (alb_g - 0.04) * met
                f0b = 0.04 + (alb_b - 0.04) * met

                ox = origins[py, px, 0]; oy = origins[py, px, 1]; oz = origins[py, px, 2]
                xc = r_cw[0, 0] * (ox - pos[0]) + r_cw[0, 1] * (oy - pos[1]) + r_cw[0, 2] * (oz - pos[2])
                yc = r_cw[1, 0] * (ox - pos[0]) + r_cw[1, 1] * (oy - pos[1]) + r_cw[1, 2] * (oz - pos[2])
                zc = r_cw[2, 0] * (ox - pos[0]) + r_cw[2, 1] * (oy - pos[1]) + r_cw[2, 2] * (oz - pos[2])
                z0 = zc
                u0 = fx * xc / cz_guard(zc) + cx
                v0 = fy * yc / cz_guard(zc) + cy
                opx = <int>floor(u0 + 0.5)
                opy = <int>floor(v0 + 0.5)
                guard = 0
                if 0 <= opx < width and 0 <= opy < height:
                    if fabs(<double>depth[opy, opx] - z0) <= thickness:
                        guard = 1

                # tangent frame (matches brdf._tangent_frame)
                if fabs(nz) < 0.999:
                    ux = 0.0; uy = 0.0; uz = 1.0
                else:
                    ux = 1.0; uy = 0.0; uz = 0.0
                tx = uy * nz - uz * ny
                ty = uz * nx - ux * nz
                tz = ux * ny - uy * nx
                ulen = sqrt(tx * tx + ty * ty + tz * tz)
                if ulen < 1e-12: ulen = 1e-12
                tx /= ulen; ty /= ulen; tz /= ulen
                bx = ny * tz - nz * ty
                by = nz * tx - nx * tz
                bz = nx * ty - ny * tx

                acc[0] = 0.0; acc[1] = 0.0; acc[2] = 0.0
                for s in range(n_samples):
                    key = (<u64>(py * w + px)) * 65536ULL + <u64>s
                    u1 = _uniform(seed, key, 0)
                    u2 = _uniform(seed, key, 1)
                    cos_h = sqrt((1.0 - u1) / (1.0 + (rho * rho - 1.0) * u1))
                    sin_h = 1.0 - cos_h * cos_h
                    sin_h = sqrt(sin_h if sin_h > 0.0 else 0.0)
                    phi = 2.0 * PI * u2
                    hx = sin_h * cos(phi) * tx + sin_h * sin(phi) * bx + cos_h * nx
                    hy = sin_h * cos(phi) * ty + sin_h * sin(phi) * by + cos_h * ny
                    hz = sin_h * cos(phi) * tz + sin_h * sin(phi) * bz + cos_h * nz

                    cos_vh = wox * hx + woy * hy + woz * hz
                    wix = 2.0 * cos_vh * hx - wox
                    wiy = 2.0 * cos_vh * hy - woy
                    wiz = 2.0 * cos_vh * hz - woz
                    cos_in = wix * nx + wiy * ny + wiz * nz
                    if cos_in <= 0.0 or cos_vh <= 1e-9:
                        continue
                    valids[py, px] += 1

                    cos_hn = _clamp(hx * nx + hy * ny + hz * nz, 0.0, 1.0)
                    d_ndf = _ggx_ndf(cos_hn, rho)
                    pdf = d_ndf * cos_hn / (4.0 * cos_vh if 4.0 * cos_vh > 1e-12 else 1e-12)
                    if pdf < 1e-300:
                        pdf = 1e-300

                    is_hit = _trace_one(
                        depth, r_cw, pos, fx, fy, cx, cy, width, height, near,
                        ox, oy, oz, wix, wiy, wiz,
                        step_size, n_steps, thickness, guard, opx, opy,
                        &hu, &hv, &ht)
                    if is_hit:
                        hits[py, px] += 1
                        _bilinear_rgb(c1, hu, hv, rad)
                    else:
                        ex = env_rot[0, 0] * wix + env_rot[0, 1] * wiy + env_rot[0, 2] * wiz
                        ey = env_rot[1, 0] * wix + env_rot[1, 1] * wiy + env_rot[1, 2] * wiz
                        ez = env_rot[2, 0] * wix + env_rot[2, 1] * wiy + env_rot[2, 2] * wiz
                        _env_sample_mip0(env_mip0, ex, ey, ez, rad)

                    # eval_brdf specular lobe on the recomputed half vector
                    hlx = wix + wox; hly = wiy + woy; hlz = wiz + woz
                    hlen = sqrt(hlx * hlx + hly * hly + hlz * hlz)
                    if hlen < 1e-9:
                        continue
                    hlx /= hlen; hly /= hlen; hlz /= hlen
                    cos_hn = _clamp(hlx * nx + hly * ny + hlz * nz, 0.0, 1.0)
                    cos_vh = _clamp(wox * hlx + woy * hly + woz * hlz, 0.0, 1.0)
                    cos_on = _clamp(wox * nx + woy * ny + woz * nz, 1e-9, 1.0)
                    d_ndf = _ggx_ndf(cos_hn, rho)
                    g = _g1(_clamp(cos_in, 1e-9, 1.0), rho) * _g1(cos_on, rho)
                    spec_common = d_ndf * g / (4.0 * _clamp(cos_in, 1e-9, 1.0) * cos_on)
                    fc = pow(1.0 - cos_vh, 5.0)
                    weight = cos_in / pdf
                    acc[0] += (f0r + (1.0 - f0r) * fc) * spec_common * rad[0] * weight
                    acc[1] += (f0g + (1.0 - f0g) * fc) * spec_common * rad[1] * weight
                    acc[2] += (f0b + (1.0 - f0b) * fc) * spec_common * rad[2] * weight

                out[py, px, 0] = acc[0] / n_samples
                out[py, px, 1] = acc[1] / n_samples
                out[py, px, 2] = acc[2] / n_samples

    return out_np, hits_np, valid_np
