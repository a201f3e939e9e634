/**
 * Paint round-trips and their reconciliation with the server.
 *
 * The server is the authority on what a stroke covers: the viewer sends a
 * seed and radius, the reply names the painted vertices and the journal
 * sequence number the operation got. Replies may arrive out of submission
 * order (two rapid strokes race), so acknowledged patches are buffered and
 * applied in ascending journal_seq once no request is still in flight.
 * Overlapping strokes therefore resolve locally exactly as they did in the
 * journal, and the patched byte buffer stays digest-identical to the
 * server's export.
 *
 * Transport failures park the request in a retry queue; the server never
 * saw the operation, so it gets a fresh (higher) sequence number when the
 * retry lands and ordering is preserved. A retry that races an ack that
 * was lost on the wire repaints the same vertices the same colour, which
 * is harmless.
 */

import { ApiError, NetworkError } from "./api.js";
import { parseMeshPly, patchColors, sha256Hex, type ParsedMesh } from "./ply.js";
import type { PaintRequest, PaintResponse } from "./types.js";

export type PaintTransport = (req: PaintRequest) => Promise<PaintResponse>;

export type SessionEvent =
  | { kind: "recolor"; meshId: string; indices: number[]; color: [number, number, number] }
  | { kind: "toast"; level: "info" | "error"; text: string }
  | { kind: "retry-queued"; queued: number };

interface PendingAck {
  seq: number;
  meshId: string;
  indices: number[];
  color: [number, number, number];
}

export class PaintSession {
  private meshes = new Map<string, ParsedMesh>();
  private pending: PendingAck[] = [];
  private retryQueue: PaintRequest[] = [];
  private inflight = 0;
  private lastApplied = 0;

  constructor(
    private readonly transport: PaintTransport,
    private readonly onEvent: (ev: SessionEvent) => void = () => {},
  ) {}

  register(meshId: string, buf: ArrayBuffer): ParsedMesh {
    const parsed = parseMeshPly(buf);
    this.meshes.set(meshId, parsed);
    return parsed;
  }

  mesh(meshId: string): ParsedMesh {
    const m = this.meshes.get(meshId);
    if (!m) throw new Error(`mesh ${meshId} not registered`);
    return m;
  }

  get queuedRetries(): number {
    return this.retryQueue.length;
  }

  /** Send one stroke; resolves once the reply has been handled. */
  async submit(req: PaintRequest): Promise<void> {
    this.inflight += 1;
    try {
      const resp = await this.transport(req);
      this.pending.push({
        seq: resp.journal_seq,
        meshId: req.mesh_id,
        indices: resp.painted,
        color: req.color,
      });
    } catch (err) {
      if (err instanceof NetworkError) {
        this.retryQueue.push(req);
        this.onEvent({ kind: "retry-queued", queued: this.retryQueue.length });
      } else if (err instanceof ApiError && err.errorName === "NoSeedVertex") {
        this.onEvent({ kind: "toast", level: "info", text: "no surface under the pointer" });
      } else if (err instanceof ApiError) {
        this.onEvent({ kind: "toast", level: "error", text: `paint failed: ${err.message}` });
      } else {
        throw err;
      }
    } finally {
      this.inflight -= 1;
      if (this.inflight === 0) this.flush();
    }
  }

  /** Resend everything the network swallowed, oldest first. */
  async retryNow(): Promise<void> {
    const queued = this.retryQueue;
    this.retryQueue = [];
    for (const req of queued) {
      await this.submit(req);
    }
  }

  private flush(): void {
    this.pending.sort((a, b) => a.seq - b.seq);
    for (const ack of this.pending) {
      if (ack.seq <= this.lastApplied) continue; // duplicate delivery
      const mesh = this.meshes.get(ack.meshId);
      if (mesh) {
        patchColors(mesh, ack.indices, ack.color);
        this.onEvent({ kind: "recolor", meshId: ack.meshId, indices: ack.indices, color: ack.color });
      }
      this.lastApplied = ack.seq;
    }
    this.pending = [];
  }

  /** Hex digest of the locally patched mesh bytes. */
  async localDigest(meshId: string): Promise<string> {
    return sha256Hex(this.mesh(meshId).bytes);
  }
}
