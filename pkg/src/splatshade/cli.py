"""Command-line interface.

Subcommands: render, lut (build/verify), metrics, edit, trace-debug. Errors
print one machine-readable JSON line to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .brdf import BrdfLut, precompute_brdf_lut
from .imageio import read_pfm, read_png, write_pfm, write_png
from .metrics import loss_rgb, psnr, ssim
from .pipeline import default_lut, render_frame
from .sceneio import channel_to_u8, load_gbuffer, load_scene, save_gbuffer
from .ssr import RenderSettings


def _settings_flags(p: argparse.ArgumentParser):
    p.add_argument("--camera", type=int, default=0, help="camera index in the scene")
    p.add_argument("--ns", type=int, default=None, help="SSR samples per pixel")
    p.add_argument("--step", type=float, default=None, help="ray-march step (meters)")
    p.add_argument("--max-len", type=float, default=None, help="max ray length (meters)")
    p.add_argument("--thickness", type=float, default=None, help="depth-test thickness (meters)")
    p.add_argument("--no-ssr", action="store_true", help="disable screen-space reflections")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--exposure", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--normal-mode", choices=("depth", "gaussian"), default=None)
    p.add_argument("--lut", default=None, help="path to a prebuilt LUT binary")
    p.add_argument("-o", "--output", default="render.png", help="output PNG")
    p.add_argument("--dump-gbuffer", metavar="DIR", default=None,
                   help="write G-buffer channel PFMs plus manifest")
    p.add_argument("--dump-hdr", metavar="DIR", default=None,
                   help="write c_d / c_s / c_spec / hdr PFMs")
    p.add_argument("--hit-mask", metavar="PATH", default=None,
                   help="write the SSR hit-count mask as 8-bit PNG")
    p.add_argument("--timer", action="store_true", help="print wall-clock render time")


def _resolve_settings(scene, args) -> RenderSettings:
    s = scene.settings
    overrides = {
        "n_samples": args.ns, "step_size": args.step, "max_ray_length": args.max_len,
        "thickness": args.thickness, "seed": args.seed, "exposure": args.exposure,
        "gamma": args.gamma, "normal_mode": args.normal_mode,
    }
    d = s.to_dict()
    for k, v in overrides.items():
        if v is not None:
            d[k] = v
    if args.no_ssr:
        d["ssr_enabled"] = False
    return RenderSettings.from_dict(d)


def _load_lut(args) -> BrdfLut:
    if args.lut:
        return BrdfLut.load(args.lut)
    return default_lut()


def _write_outputs(result, scene, camera, args):
    write_png(result.ldr, args.output)
    if args.dump_gbuffer:
        save_gbuffer(result.gbuffer, args.dump_gbuffer)
    if args.dump_hdr:
        os.makedirs(args.dump_hdr, exist_ok=True)
        write_pfm(result.c_d, os.path.join(args.dump_hdr, "c_d.pfm"))
        write_pfm(result.c_s, os.path.join(args.dump_hdr, "c_s.pfm"))
        write_pfm(result.c_spec, os.path.join(args.dump_hdr, "c_spec.pfm"))
        write_pfm(result.hdr, os.path.join(args.dump_hdr, "hdr.pfm"))
    if args.hit_mask:
        if result.hit_count is None:
            raise ValueError("--hit-mask needs SSR enabled")
        mask = (result.hit_count > 0).astype(np.uint8) * 255
        write_png(np.repeat(mask[..., None], 3, axis=-1), args.hit_mask)


def cmd_render(args):
    scene = load_scene(args.scene)
    settings = _resolve_settings(scene, args)
    t0 = time.perf_counter()
    result = render_frame(scene, args.camera, settings=settings, lut=_load_lut(args))
    elapsed = time.perf_counter() - t0
    _write_outputs(result, scene, args.camera, args)
    if args.timer:
        print(f"render: {elapsed:.3f}s")
    print(args.output)
    return 0


def _parse_material_patch(text: str):
    # GROUP:key=value[,key=value...]; albedo takes r/g/b slash syntax
    group, _, body = text.partition(":")
    if not body:
        raise ValueError(f"bad --set-material {text!r}; expected GROUP:key=value[,...]")
    patch = {}
    for item in body.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if key in ("roughness", "metallic", "gamma"):
            patch[key] = float(value)
        elif key == "albedo":
            parts = [float(x) for x in value.split("/")]
            if len(parts) != 3:
                raise ValueError(f"albedo needs r/g/b, got {value!r}")
            patch[key] = tuple(parts)
        else:
            raise ValueError(f"unknown material key {key!r}")
    return group, patch


def cmd_edit(args):
    scene = load_scene(args.scene)
    settings = _resolve_settings(scene, args)

    overrides = {}
    for spec_text in args.set_material or ():
        group, patch = _parse_material_patch(spec_text)
        known = scene.groups()
        if group not in known:
            raise ValueError(f"unknown group {group!r}; scene has {known}")
        overrides.setdefault(group, {}).update(patch)

    env = None
    env_rot = None
    if args.env or args.env_constant or args.env_yaw is not None:
        from .envlight import Cubemap, load_equirect_pfm, yaw_matrix
        from .sceneio import EnvironmentRef

        face = scene.environment.face_size
        if args.env:
            env = load_equirect_pfm(args.env, face)
        elif args.env_constant:
            rgb = tuple(float(x) for x in args.env_constant.split(","))
            env = Cubemap.constant(rgb, face)
        yaw = args.env_yaw if args.env_yaw is not None else scene.environment.yaw
        env_rot = yaw_matrix(yaw)

    layers = [load_gbuffer(m) for m in args.insert_layer or ()]
    extra = []
    for path in args.insert_scene or ():
        extra.extend(load_scene(path).gaussians)

    t0 = time.perf_counter()
    result = render_frame(scene, args.camera, settings=settings, overrides=overrides,
                          extra_gaussians=extra, layers=layers, env=env,
                          env_rot=env_rot, lut=_load_lut(args))
    elapsed = time.perf_counter() - t0
    _write_outputs(result, scene, args.camera, args)
    if args.timer:
        print(f"render: {elapsed:.3f}s")
    print(args.output)
    return 0


def cmd_lut_build(args):
    lut = precompute_brdf_lut(args.resolution, args.samples, args.seed)
    lut.save(args.output)
    print(args.output)
    return 0


def cmd_lut_verify(args):
    lut = BrdfLut.load(args.path)
    lut.validate()
    # spot-check entries against a direct uniform-hemisphere integration
    from .brdf import RHO_MIN, smith_geometry

    rng = np.random.default_rng(17)
    n = lut.resolution
    worst = 0.0
    probes = np.linspace(0.2, 0.98, args.probes)
    for cos_p in probes:
        for rho_p in probes:
            i = min(int(cos_p * n), n - 1)
            j = min(int(rho_p * n), n - 1)
            cos_nv = (i + 0.5) / n
            rho = max((j + 0.5) / n, RHO_MIN)
            # one jittered sample per equal-area stratum: uniform over the
            # hemisphere with far lower variance than independent draws
            n_t = int(np.sqrt(args.oracle_samples / 2))
            n_p = 2 * n_t
            m = n_t * n_p
            ct = ((np.arange(n_t)[:, None] + rng.random((n_t, n_p))) / n_t).ravel()
            ph = (2 * np.pi * (np.arange(n_p)[None, :] + rng.random((n_t, n_p))) / n_p).ravel()
            st = np.sqrt(1 - ct**2)
            wi = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1)
            v = np.array([np.sqrt(1 - cos_nv**2), 0.0, cos_nv])
            h = wi + v
            h /= np.linalg.norm(h, axis=-1, keepdims=True)
            cos_hn = np.clip(h[:, 2], 0, 1)
            cos_vh = np.clip((v * h).sum(-1), 1e-12, 1)
            r2 = rho * rho
            d = r2 / (np.pi * (cos_hn**2 * (r2 - 1) + 1) ** 2)
            g = smith_geometry(np.clip(ct, 1e-9, 1), cos_nv, rho)
            common = d * g / np.clip(4 * ct * cos_nv, 1e-12, None) * ct * 2 * np.pi
            fc = (1 - cos_vh) ** 5
            s_ref = float(np.mean(common * (1 - fc)))
            b_ref = float(np.mean(common * fc))
            err = max(abs(s_ref - float(lut.data[i, j, 0])), abs(b_ref - float(lut.data[i, j, 1])))
            worst = max(worst, err)
    print(json.dumps({"resolution": lut.resolution, "max_probe_error": worst,
                      "ok": worst <= args.tolerance}))
    return 0 if worst <= args.tolerance else 1


def _load_image_any(path):
    if str(path).lower().endswith(".pfm"):
        img = read_pfm(path)
        return img if img.ndim == 3 else np.repeat(img[..., None], 3, axis=-1)
    return read_png(path).astype(np.float64) / 255.0


def cmd_metrics(args):
    a = _load_image_any(args.image_a)
    b = _load_image_any(args.image_b)
    out = {
        "psnr": psnr(np.clip(a, 0, 1), np.clip(b, 0, 1)),
        "ssim": ssim(np.clip(a, 0, 1), np.clip(b, 0, 1)),
        "loss_rgb": loss_rgb(a, b, args.lambda1),
        "l1": float(np.abs(a - b).mean()),
    }
    print(json.dumps(out))
    return 0


def cmd_trace_debug(args):
    from PIL import Image, ImageDraw

    scene = load_scene(args.scene)
    settings = _resolve_settings(scene, args)
    if not settings.ssr_enabled:
        raise ValueError("trace-debug requires SSR enabled")
    result = render_frame(scene, args.camera, settings=settings, lut=_load_lut(args))
    os.makedirs(args.out_dir, exist_ok=True)

    mask = (result.hit_count > 0).astype(np.uint8) * 255
    write_png(np.repeat(mask[..., None], 3, axis=-1),
              os.path.join(args.out_dir, "hit_mask.png"))

    # point pairs: re-trace the mirror direction of a sparse pixel grid and
    # connect each origin with its intersection
    from .ssr import trace_screen_rays

    cam = scene.cameras[args.camera]
    gb = result.gbuffer
    img = Image.fromarray(result.ldr, mode="RGB")
    draw = ImageDraw.Draw(img)
    shade = gb.shadeable_mask()
    stride = max(cam.height, cam.width) // 12
    ys, xs = np.mgrid[stride // 2:cam.height:stride, stride // 2:cam.width:stride]
    ys, xs = ys.ravel(), xs.ravel()
    keep = shade[ys, xs]
    ys, xs = ys[keep], xs[keep]
    if len(ys):
        rays = cam.pixel_rays()
        origins = cam.unproject(np.stack([xs, ys], axis=-1).astype(np.float64),
                                gb.depth[ys, xs].astype(np.float64))
        v = rays[ys, xs]
        n = gb.normal[ys, xs].astype(np.float64)
        r = v - 2.0 * np.sum(v * n, axis=-1, keepdims=True) * n
        hit, uv, _ = trace_screen_rays(gb.depth, cam, origins, r, settings)
        for k in range(len(ys)):
            if not hit[k]:
                continue
            x0, y0 = int(xs[k]), int(ys[k])
            x1, y1 = float(uv[k, 0]), float(uv[k, 1])
            draw.line((x0, y0, x1, y1), fill=(255, 220, 40), width=1)
            draw.ellipse((x0 - 2, y0 - 2, x0 + 2, y0 + 2), outline=(80, 220, 255))
            draw.ellipse((x1 - 2, y1 - 2, x1 + 2, y1 + 2), outline=(255, 100, 100))
    img.save(os.path.join(args.out_dir, "point_pairs.png"))
    print(args.out_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="splatshade",
                                 description="Deferred Gaussian-splat renderer with SSR")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one frame of a scene")
    p.add_argument("scene")
    _settings_flags(p)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("edit", help="apply edits (materials, environment, inserts) and render")
    p.add_argument("scene")
    p.add_argument("--set-material", action="append", metavar="GROUP:k=v[,k=v]",
                   help="material override, e.g. floor:roughness=0.05,metallic=1")
    p.add_argument("--env", default=None, help="equirect PFM to relight with")
    p.add_argument("--env-constant", default=None, metavar="R,G,B")
    p.add_argument("--env-yaw", type=float, default=None, help="environment yaw (radians)")
    p.add_argument("--insert-layer", action="append", metavar="MANIFEST",
                   help="G-buffer manifest merged by depth")
    p.add_argument("--insert-scene", action="append", metavar="SCENE",
                   help="gaussians of another scene file, appended")
    _settings_flags(p)
    p.set_defaults(fn=cmd_edit)

    p = sub.add_parser("lut", help="split-sum lookup table tools")
    lut_sub = p.add_subparsers(dest="lut_command", required=True)
    b = lut_sub.add_parser("build")
    b.add_argument("-o", "--output", default="brdf_lut.bin")
    b.add_argument("--resolution", type=int, default=64)
    b.add_argument("--samples", type=int, default=1024)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(fn=cmd_lut_build)
    v = lut_sub.add_parser("verify")
    v.add_argument("path")
    v.add_argument("--probes", type=int, default=5)
    v.add_argument("--oracle-samples", type=int, default=1_000_000)
    v.add_argument("--tolerance", type=float, default=0.02)
    v.set_defaults(fn=cmd_lut_verify)

    p = sub.add_parser("metrics", help="PSNR/SSIM/losses between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--lambda1", type=float, default=0.8)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("trace-debug", help="emit hit mask and origin/hit point pairs")
    p.add_argument("scene")
    p.add_argument("--out-dir", default="trace_debug")
    _settings_flags(p)
    p.set_defaults(fn=cmd_trace_debug)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as e:  # noqa: BLE001 - single reporting point
        print(json.dumps({"error": {"type": type(e).__name__, "message": str(e)}}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
