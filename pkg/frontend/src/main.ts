import { ServiceClient } from "./api.js";
import { ChannelViewer } from "./channels.js";
import { FrameSocket } from "./connection.js";
import { ControlPanel } from "./controls.js";
import { orbitPose, type Orbit } from "./orbit.js";
import { EditorState } from "./state.js";
import type { ChannelName } from "./types.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8090";

async function boot() {
  const root = document.getElementById("app")!;
  const client = new ServiceClient(SERVICE_URL);
  const state = new EditorState();

  const status = document.createElement("div");
  status.id = "status";
  const viewport = document.createElement("img");
  viewport.id = "viewport";
  viewport.alt = "render";
  root.append(status, viewport);

  let frameUrl = "";
  state.subscribe((snap) => {
    status.textContent =
      snap.status === "connected"
        ? `connected, revision ${snap.revision}`
        : snap.status;
    status.className = snap.status;
    if (snap.lastError) status.textContent += ` — ${snap.lastError}`;
    if (snap.frame && snap.channel === "final") {
      const blob = new Blob([snap.frame.png.slice()], { type: "image/png" });
      const url = URL.createObjectURL(blob);
      viewport.src = url;
      if (frameUrl) URL.revokeObjectURL(frameUrl);
      frameUrl = url;
    }
  });

  const service = await client.state();
  const socket = new FrameSocket(client.wsUrl(), state);
  socket.connect();

  const controls = new ControlPanel(
    client, state, service.groups, service.settings, service.environment.yaw);
  const viewer = new ChannelViewer(client, state, service.channels as ChannelName[]);
  root.append(controls.element, viewer.element);

  // client-side orbit: drag the viewport, full pose goes to the service
  const orbit: Orbit = { target: [0, 0.8, 2.0], yaw: 0, pitch: 0.35, radius: 5.5 };
  let dragging = false;
  let last: [number, number] = [0, 0];
  viewport.addEventListener("pointerdown", (e) => {
    dragging = true;
    last = [e.clientX, e.clientY];
    viewport.setPointerCapture(e.pointerId);
  });
  viewport.addEventListener("pointerup", () => (dragging = false));
  let orbitTimer: ReturnType<typeof setTimeout> | null = null;
  viewport.addEventListener("pointermove", (e) => {
    if (!dragging) return;
    orbit.yaw += (e.clientX - last[0]) * 0.005;
    orbit.pitch = Math.min(1.3, Math.max(-0.2, orbit.pitch + (e.clientY - last[1]) * 0.005));
    last = [e.clientX, e.clientY];
    if (orbitTimer) clearTimeout(orbitTimer);
    orbitTimer = setTimeout(() => {
      socket.sendCamera(orbitPose(orbit, service.camera));
    }, 100);
  });
}

boot().catch((err) => {
  const root = document.getElementById("app")!;
  root.textContent = `failed to reach the service at ${SERVICE_URL}: ${err}`;
});
