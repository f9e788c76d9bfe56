import type { Frame } from "./types.js";

const PNG_MAGIC = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

/** Split a websocket payload into (revision, png): 8-byte LE uint64 prefix. */
export function parseFrame(data: ArrayBuffer | Uint8Array): Frame {
  const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
  if (bytes.length < 16) {
    throw new Error(`frame too short: ${bytes.length} bytes`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, 8);
  const revision = Number(view.getBigUint64(0, true));
  const png = bytes.subarray(8);
  for (let i = 0; i < PNG_MAGIC.length; i++) {
    if (png[i] !== PNG_MAGIC[i]) {
      throw new Error("frame payload is not a PNG");
    }
  }
  return { revision, png };
}
