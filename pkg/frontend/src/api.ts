/**
 * Thin fetch client for the inspection service.
 *
 * Domain failures (the server's {error, message} envelope) raise ApiError
 * with the server-side exception name. Transport failures (fetch itself
 * rejecting) raise NetworkError so callers can tell "the server said no"
 * from "the request never got there" and queue a retry for the latter.
 */

import type {
  AnnotationRecord,
  AnnotationRequest,
  PaintRequest,
  PaintResponse,
  ProjectManifest,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly errorName: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export class NetworkError extends Error {}

async function raise(resp: Response): Promise<never> {
  let name = `http_${resp.status}`;
  let message = resp.statusText;
  try {
    const body = await resp.json();
    if (typeof body.error === "string") name = body.error;
    if (typeof body.message === "string") message = body.message;
    else if (body.detail) message = JSON.stringify(body.detail); // validation errors
  } catch {
    // non-JSON error body, keep the status text
  }
  throw new ApiError(name, message, resp.status);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, init);
    } catch (err) {
      throw new NetworkError(String(err));
    }
    if (!resp.ok) await raise(resp);
    return resp;
  }

  async project(): Promise<ProjectManifest> {
    return (await this.request("/api/project")).json();
  }

  async meshBytes(meshId: string): Promise<ArrayBuffer> {
    return (await this.request(`/api/mesh/${encodeURIComponent(meshId)}`)).arrayBuffer();
  }

  async exportBytes(meshId: string): Promise<ArrayBuffer> {
    return (await this.request(`/api/export/${encodeURIComponent(meshId)}`)).arrayBuffer();
  }

  async sectionBlob(index: number, mip = 0): Promise<Blob> {
    return (await this.request(`/api/section/${index}?mip=${mip}`)).blob();
  }

  async paint(req: PaintRequest): Promise<PaintResponse> {
    const resp = await this.request("/api/paint", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return resp.json();
  }

  async annotations(): Promise<AnnotationRecord[]> {
    const body = await (await this.request("/api/annotations")).json();
    return body.annotations;
  }

  async addAnnotation(req: AnnotationRequest): Promise<AnnotationRecord> {
    const resp = await this.request("/api/annotations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return resp.json();
  }

  async deleteAnnotation(id: number): Promise<void> {
    await this.request(`/api/annotations/${id}`, { method: "DELETE" });
  }
}
