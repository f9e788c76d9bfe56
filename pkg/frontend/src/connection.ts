import { parseFrame } from "./frames.js";
import type { EditorState } from "./state.js";
import type { CameraPose } from "./types.js";

export interface FrameSocketOptions {
  /** injectable for tests (node: the `ws` package) */
  factory?: (url: string) => WebSocket;
  maxBackoffMs?: number;
  baseBackoffMs?: number;
}

/**
 * Streams frames into the state store, reconnecting with exponential backoff
 * after a drop. Stale frames are discarded by the store itself.
 */
export class FrameSocket {
  private ws: WebSocket | null = null;
  private closed = false;
  private attempt = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private state: EditorState,
    private opts: FrameSocketOptions = {},
  ) {}

  connect() {
    if (this.closed) return;
    this.state.setStatus("connecting");
    const factory = this.opts.factory ?? ((u: string) => new WebSocket(u));
    const ws = factory(this.url);
    ws.binaryType = "arraybuffer";
    this.ws = ws;

    ws.onopen = () => {
      this.attempt = 0;
      this.state.setStatus("connected");
    };
    ws.onmessage = (ev: MessageEvent) => {
      try {
        this.state.acceptFrame(parseFrame(ev.data as ArrayBuffer));
      } catch (err) {
        this.state.reportError(String(err));
      }
    };
    ws.onclose = () => this.scheduleRetry();
    ws.onerror = () => {
      /* the close handler drives the retry */
    };
  }

  private scheduleRetry() {
    if (this.closed) return;
    this.state.setStatus("disconnected");
    const base = this.opts.baseBackoffMs ?? 500;
    const cap = this.opts.maxBackoffMs ?? 10_000;
    const delay = Math.min(cap, base * 2 ** this.attempt);
    this.attempt += 1;
    this.retryTimer = setTimeout(() => this.connect(), delay);
  }

  sendCamera(pose: CameraPose) {
    if (this.ws && this.ws.readyState === 1) {
      this.ws.send(JSON.stringify({ camera: pose }));
    }
  }

  close() {
    this.closed = true;
    if (this.retryTimer) clearTimeout(this.retryTimer);
    this.ws?.close();
  }
}
