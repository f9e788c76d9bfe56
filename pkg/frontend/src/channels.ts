import type { ServiceClient } from "./api.js";
import type { EditorState } from "./state.js";
import type { ChannelName } from "./types.js";

/**
 * G-buffer channel viewer. The service maps channels to 8-bit PNGs with the
 * documented conventions (normals (n+1)/2, depth normalized to [near, far]),
 * so this stays a dumb image fetcher keyed by revision. Channels the service
 * does not expose (e.g. hitmask with reflections disabled) grey out.
 */
export class ChannelViewer {
  readonly element = document.createElement("div");
  private select = document.createElement("select");
  private img = document.createElement("img");
  private shownRevision = -1;

  constructor(
    private client: ServiceClient,
    private state: EditorState,
    channels: ChannelName[],
  ) {
    this.element.className = "channel-viewer";
    for (const name of channels) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      this.select.append(opt);
    }
    this.select.addEventListener("change", () => {
      this.state.selectChannel(this.select.value as ChannelName);
    });
    this.img.alt = "channel";
    this.element.append(this.select, this.img);

    this.state.subscribe((snap) => {
      if (snap.channel !== this.select.value) this.select.value = snap.channel;
      if (snap.revision !== this.shownRevision || snap.channel !== this.lastChannel) {
        this.shownRevision = snap.revision;
        this.lastChannel = snap.channel;
        this.refresh(snap.channel, snap.revision);
      }
    });
  }

  private lastChannel: ChannelName = "final";

  private async refresh(channel: ChannelName, revision: number) {
    try {
      const res = await fetch(this.client.channelUrl(channel, revision));
      if (!res.ok) {
        this.img.classList.add("unavailable");
        return;
      }
      const blob = await res.blob();
      const url = URL.createObjectURL(blob);
      const old = this.img.src;
      this.img.src = url;
      this.img.classList.remove("unavailable");
      if (old.startsWith("blob:")) URL.revokeObjectURL(old);
    } catch {
      this.img.classList.add("unavailable");
    }
  }
}
