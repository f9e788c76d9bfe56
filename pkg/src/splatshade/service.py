"""Interactive rendering service: one scene, one mutable session, frames over
a websocket.

HTTP mutations (materials, environment, settings, inserts) bump a monotone
revision counter; every websocket client receives PNG frames tagged with the
revision they were rendered at (8-byte little-endian prefix). Rapid edits
coalesce: only the latest revision is guaranteed to produce a frame.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import struct
from typing import Optional

import anyio.to_thread
import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from .envlight import Cubemap, load_equirect_pfm, yaw_matrix
from .imageio import png_bytes
from .pipeline import default_lut, render_frame
from .sceneio import EnvironmentRef, channel_to_u8, load_gbuffer, load_scene
from .sceneio import _parse_camera, _parse_gaussian
from .ssr import RenderSettings

_CHANNELS = ("final", "albedo", "normal", "depth", "roughness", "metallic",
             "gamma", "alpha", "hitmask")


class MaterialPatch(BaseModel):
    albedo: Optional[tuple] = None
    roughness: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    metallic: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    gamma: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    def to_overrides(self) -> dict:
        patch = {}
        if self.albedo is not None:
            if len(self.albedo) != 3 or not all(0.0 <= float(c) <= 1.0 for c in self.albedo):
                raise HTTPException(422, "albedo must be three components in [0,1]")
            patch["albedo"] = tuple(float(c) for c in self.albedo)
        if self.roughness is not None:
            patch["roughness"] = self.roughness
        if self.metallic is not None:
            patch["metallic"] = self.metallic
        if self.gamma is not None:
            patch["gamma"] = self.gamma
        return patch


class EnvironmentPut(BaseModel):
    name: Optional[str] = None
    constant: Optional[tuple] = None
    yaw: float = 0.0


class SettingsPatch(BaseModel):
    n_samples: Optional[int] = Field(default=None, ge=1, le=65536)
    step_size: Optional[float] = Field(default=None, gt=0)
    max_ray_length: Optional[float] = Field(default=None, gt=0)
    thickness: Optional[float] = Field(default=None, gt=0)
    ssr_enabled: Optional[bool] = None
    exposure: Optional[float] = Field(default=None, gt=0)
    gamma: Optional[float] = Field(default=None, gt=0)
    seed: Optional[int] = None
    normal_mode: Optional[str] = None


class InsertBody(BaseModel):
    kind: str
    group: Optional[str] = None
    gaussians: Optional[list] = None
    manifest: Optional[str] = None


class Session:
    """Mutable editor state; all mutation happens on the event loop."""

    def __init__(self, scene, asset_dir: str):
        self.scene = scene
        self.asset_dir = asset_dir
        self.camera = scene.cameras[0]
        self.settings = scene.settings
        self.overrides: dict = {}
        self.env = scene.environment.load(scene.base_dir)
        self.env_rot = scene.environment.rotation()
        self.env_desc = {"constant": scene.environment.constant,
                         "path": scene.environment.path,
                         "yaw": scene.environment.yaw}
        self.inserted_layers: dict = {}
        self.inserted_groups: dict = {}
        self.next_insert_id = 1
        self.revision = 0
        self.changed = asyncio.Event()
        self.lut = default_lut()
        self._render_lock = asyncio.Lock()
        self._cache: dict = {}

    def bump(self):
        self.revision += 1
        self.changed.set()
        self.changed = asyncio.Event()  # wake current waiters; arm a new event

    def snapshot(self) -> dict:
        return {
            "revision": self.revision,
            "camera": self.camera,
            "settings": self.settings,
            "overrides": {k: dict(v) for k, v in self.overrides.items()},
            "extra": [g for gs in self.inserted_groups.values() for g in gs],
            "layers": list(self.inserted_layers.values()),
            "env": self.env,
            "env_rot": self.env_rot,
        }

    def render(self, snap: dict):
        """Pure function of the snapshot; cached per revision."""
        rev = snap["revision"]
        if rev in self._cache:
            return self._cache[rev]
        result = render_frame(
            self.scene, snap["camera"], settings=snap["settings"],
            overrides=snap["overrides"], extra_gaussians=snap["extra"],
            layers=snap["layers"], env=snap["env"], env_rot=snap["env_rot"],
            lut=self.lut,
        )
        self._cache = {rev: result}  # latest-wins cache
        return result


def create_app(scene_path: str, asset_dir: str | None = None) -> FastAPI:
    from fastapi.middleware.cors import CORSMiddleware

    scene = load_scene(scene_path)
    asset_dir = asset_dir or scene.base_dir
    app = FastAPI(title="splatshade service")
    # the browser editor is served from a different origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.session = Session(scene, asset_dir)

    def session() -> Session:
        return app.state.session

    async def rendered(snap):
        s = session()
        async with s._render_lock:
            if snap["revision"] in s._cache:
                return s._cache[snap["revision"]]
            return await anyio.to_thread.run_sync(s.render, snap)

    @app.get("/state")
    async def get_state():
        s = session()
        return {
            "revision": s.revision,
            "num_gaussians": len(s.scene.gaussians),
            "groups": s.scene.groups(),
            "settings": s.settings.to_dict(),
            "environment": {**s.env_desc},
            "camera": {
                "fx": s.camera.fx, "fy": s.camera.fy,
                "cx": s.camera.cx, "cy": s.camera.cy,
                "width": s.camera.width, "height": s.camera.height,
                "world_from_camera": s.camera.world_from_camera.tolist(),
                "near": s.camera.near, "far": s.camera.far,
            },
            "overrides": s.overrides,
            "inserted": sorted(list(s.inserted_layers) + list(s.inserted_groups)),
            "channels": list(_CHANNELS),
        }

    @app.patch("/material/{group_id}")
    async def patch_material(group_id: str, body: MaterialPatch):
        s = session()
        if group_id not in s.scene.groups():
            raise HTTPException(404, f"unknown group {group_id!r}")
        patch = body.to_overrides()
        s.overrides.setdefault(group_id, {}).update(patch)
        s.bump()  # empty patches still bump: mutation order stays observable
        return {"revision": s.revision}

    @app.put("/environment")
    async def put_environment(body: EnvironmentPut):
        s = session()
        face = s.scene.environment.face_size
        if body.name is not None:
            path = os.path.join(s.asset_dir, body.name)
            if not os.path.exists(path):
                raise HTTPException(404, f"environment asset {body.name!r} not found")
            try:
                env = load_equirect_pfm(path, face)
            except ValueError as e:
                raise HTTPException(422, f"malformed environment: {e}") from None
            s.env_desc = {"path": body.name, "constant": None, "yaw": body.yaw}
        elif body.constant is not None:
            if len(body.constant) != 3:
                raise HTTPException(422, "constant must be [r, g, b]")
            env = Cubemap.constant(tuple(float(c) for c in body.constant), face)
            s.env_desc = {"path": None, "constant": tuple(body.constant), "yaw": body.yaw}
        else:
            raise HTTPException(422, "need 'name' or 'constant'")
        s.env = env
        s.env_rot = yaw_matrix(body.yaw)
        s.bump()
        return {"revision": s.revision}

    @app.patch("/settings")
    async def patch_settings(body: SettingsPatch):
        s = session()
        d = s.settings.to_dict()
        for k, v in body.model_dump(exclude_none=True).items():
            d[k] = v
        try:
            s.settings = RenderSettings.from_dict(d)
        except ValueError as e:
            raise HTTPException(422, str(e)) from None
        s.bump()
        return {"revision": s.revision}

    @app.post("/insert")
    async def post_insert(body: InsertBody):
        s = session()
        insert_id = f"insert-{s.next_insert_id}"
        if body.kind == "layer":
            if not body.manifest:
                raise HTTPException(422, "layer insert needs 'manifest'")
            path = os.path.join(s.asset_dir, body.manifest)
            if not os.path.exists(path):
                raise HTTPException(404, f"manifest {body.manifest!r} not found")
            try:
                layer = load_gbuffer(path)
            except (ValueError, KeyError) as e:
                raise HTTPException(422, f"bad layer: {e}") from None
            if (layer.width, layer.height) != (s.camera.width, s.camera.height):
                raise HTTPException(422, "layer dimensions do not match the session camera")
            s.inserted_layers[insert_id] = layer
        elif body.kind == "gaussians":
            if not body.gaussians:
                raise HTTPException(422, "gaussian insert needs 'gaussians'")
            try:
                parsed = [_parse_gaussian(dict(g), i) for i, g in enumerate(body.gaussians)]
            except ValueError as e:
                raise HTTPException(422, str(e)) from None
            if body.group:
                for g in parsed:
                    g.group_id = body.group
            s.inserted_groups[insert_id] = parsed
        else:
            raise HTTPException(422, f"unknown insert kind {body.kind!r}")
        s.next_insert_id += 1
        s.bump()
        return {"id": insert_id, "revision": s.revision}

    @app.delete("/insert/{insert_id}")
    async def delete_insert(insert_id: str):
        s = session()
        if insert_id in s.inserted_layers:
            del s.inserted_layers[insert_id]
        elif insert_id in s.inserted_groups:
            del s.inserted_groups[insert_id]
        else:
            raise HTTPException(404, f"unknown insert {insert_id!r}")
        s.bump()
        return {"revision": s.revision}

    @app.get("/channel/{name}")
    async def get_channel(name: str):
        from fastapi.responses import Response

        s = session()
        if name not in _CHANNELS:
            raise HTTPException(404, f"unknown channel {name!r}; have {_CHANNELS}")
        result = await rendered(s.snapshot())
        if name == "final":
            img = result.ldr
        elif name == "hitmask":
            if result.hit_count is None:
                raise HTTPException(409, "SSR disabled: no hit mask")
            img = np.repeat((result.hit_count > 0).astype(np.uint8)[..., None] * 255, 3, axis=-1)
        else:
            img = channel_to_u8(result.gbuffer, name, s.camera)
        return Response(content=png_bytes(img), media_type="image/png")

    @app.websocket("/ws")
    async def ws_frames(ws: WebSocket):
        await ws.accept()
        s = session()
        stop = asyncio.Event()

        async def recv_loop():
            try:
                while True:
                    msg = await ws.receive_json()
                    if isinstance(msg, dict) and "camera" in msg:
                        s.camera = _parse_camera(dict(msg["camera"]), 0)
                        s.bump()
                    else:
                        raise ValueError("expected a {'camera': ...} message")
            except WebSocketDisconnect:
                pass
            except Exception:
                try:
                    await ws.close(code=1002)
                except RuntimeError:
                    pass
            finally:
                stop.set()

        recv_task = asyncio.create_task(recv_loop())
        try:
            last = -1
            while not stop.is_set():
                if s.revision == last:
                    waiter = asyncio.ensure_future(s.changed.wait())
                    stopper = asyncio.ensure_future(stop.wait())
                    done, pending = await asyncio.wait(
                        {waiter, stopper}, return_when=asyncio.FIRST_COMPLETED)
                    for task in pending:
                        task.cancel()
                    continue
                snap = s.snapshot()
                result = await rendered(snap)
                payload = struct.pack("<Q", snap["revision"]) + png_bytes(result.ldr)
                await ws.send_bytes(payload)
                last = snap["revision"]
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            recv_task.cancel()

    return app


def main(argv=None):
    ap = argparse.ArgumentParser(prog="splatshade-service")
    ap.add_argument("--scene", default=os.environ.get("SPLATSHADE_SCENE"),
                    help="scene JSON (or env SPLATSHADE_SCENE)")
    ap.add_argument("--assets", default=os.environ.get("SPLATSHADE_ASSETS"),
                    help="asset directory for environments/layers (or env SPLATSHADE_ASSETS)")
    ap.add_argument("--host", default=os.environ.get("SPLATSHADE_HOST", "127.0.0.1"))
    ap.add_argument("--port", type=int, default=int(os.environ.get("SPLATSHADE_PORT", "8090")))
    args = ap.parse_args(argv)
    if not args.scene:
        ap.error("--scene (or SPLATSHADE_SCENE) is required")

    import uvicorn

    app = create_app(args.scene, args.assets)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
