import type { ChannelName, ConnectionStatus, Frame } from "./types.js";

export interface EditorSnapshot {
  status: ConnectionStatus;
  revision: number;
  frame: Frame | null;
  selectedGroup: string | null;
  channel: ChannelName;
  lastError: string | null;
}

type Listener = (snap: EditorSnapshot) => void;

/**
 * Single store for everything the UI renders. The displayed revision is
 * monotone: stale frames (revision <= what is already shown) are discarded.
 */
export class EditorState {
  private status: ConnectionStatus = "connecting";
  private revision = -1;
  private frame: Frame | null = null;
  private selectedGroup: string | null = null;
  private channel: ChannelName = "final";
  private lastError: string | null = null;
  private listeners: Listener[] = [];
  droppedStale = 0;

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    fn(this.snapshot());
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  snapshot(): EditorSnapshot {
    return {
      status: this.status,
      revision: this.revision,
      frame: this.frame,
      selectedGroup: this.selectedGroup,
      channel: this.channel,
      lastError: this.lastError,
    };
  }

  private emit() {
    const snap = this.snapshot();
    for (const fn of this.listeners) fn(snap);
  }

  setStatus(status: ConnectionStatus) {
    this.status = status;
    this.emit();
  }

  /** Returns true when the frame was accepted (newer than the shown one). */
  acceptFrame(frame: Frame): boolean {
    if (frame.revision <= this.revision) {
      this.droppedStale += 1;
      return false;
    }
    this.revision = frame.revision;
    this.frame = frame;
    this.emit();
    return true;
  }

  selectGroup(group: string | null) {
    this.selectedGroup = group;
    this.emit();
  }

  selectChannel(channel: ChannelName) {
    this.channel = channel;
    this.emit();
  }

  reportError(message: string | null) {
    this.lastError = message;
    this.emit();
  }
}
