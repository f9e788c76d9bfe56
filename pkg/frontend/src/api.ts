import type { CameraPose, ServiceState } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function expectOk(res: Response): Promise<unknown> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: unknown };
      if (body.detail) detail = JSON.stringify(body.detail);
    } catch {
      /* body was not JSON */
    }
    throw new ApiError(res.status, detail);
  }
  return res.json();
}

export class ServiceClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  wsUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/ws";
  }

  channelUrl(name: string, revision: number): string {
    // the revision query defeats stale caches; the server ignores it
    return this.url(`/channel/${name}?rev=${revision}`);
  }

  async state(): Promise<ServiceState> {
    return (await expectOk(await fetch(this.url("/state")))) as ServiceState;
  }

  async patchMaterial(group: string, patch: Record<string, number | number[]>): Promise<void> {
    await expectOk(
      await fetch(this.url(`/material/${encodeURIComponent(group)}`), {
        method: "PATCH",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(patch),
      }),
    );
  }

  async patchSettings(patch: Record<string, number | boolean>): Promise<void> {
    await expectOk(
      await fetch(this.url("/settings"), {
        method: "PATCH",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(patch),
      }),
    );
  }

  async putEnvironment(body: {
    name?: string;
    constant?: number[];
    yaw: number;
  }): Promise<void> {
    await expectOk(
      await fetch(this.url("/environment"), {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  async insert(body: Record<string, unknown>): Promise<string> {
    const out = (await expectOk(
      await fetch(this.url("/insert"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    )) as { id: string };
    return out.id;
  }

  async removeInsert(id: string): Promise<void> {
    await expectOk(await fetch(this.url(`/insert/${id}`), { method: "DELETE" }));
  }
}

export type { CameraPose };
