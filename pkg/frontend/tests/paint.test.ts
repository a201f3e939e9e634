import { describe, expect, it } from "vitest";
import { ApiError, NetworkError } from "../src/api.js";
import { PaintSession, type SessionEvent } from "../src/paint.js";
import type { PaintRequest, PaintResponse } from "../src/types.js";
import { tinyMesh } from "./helpers.js";

function deferred<T>() {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

function req(color: [number, number, number]): PaintRequest {
  return { mesh_id: "m", seed_point: [0, 0, 0], tool_radius_um: 1, color };
}

function colorsOf(session: PaintSession): number[][] {
  const c = session.mesh("m").colors;
  const out: number[][] = [];
  for (let i = 0; i < c.length; i += 3) out.push([c[i], c[i + 1], c[i + 2]]);
  return out;
}

describe("reconciliation ordering", () => {
  it("applies overlapping acks in journal order even when replies race", async () => {
    const replies = [deferred<PaintResponse>(), deferred<PaintResponse>()];
    let call = 0;
    const session = new PaintSession(() => replies[call++].promise);
    session.register("m", tinyMesh());

    const red = session.submit(req([255, 0, 0])); // will get seq 1, covers 0 and 1
    const blue = session.submit(req([0, 0, 255])); // will get seq 2, covers 1 and 2

    // the second stroke's reply arrives first
    replies[1].resolve({ painted_count: 2, journal_seq: 2, painted: [1, 2] });
    await Promise.resolve();
    replies[0].resolve({ painted_count: 2, journal_seq: 1, painted: [0, 1] });
    await Promise.all([red, blue]);

    // vertex 1 was painted by both; the journal says blue came second
    expect(colorsOf(session)).toEqual([
      [255, 0, 0],
      [0, 0, 255],
      [0, 0, 255],
      [200, 200, 200],
    ]);
  });

  it("ignores a duplicate ack for an already-applied sequence", async () => {
    let seq = 0;
    const session = new PaintSession(async () => ({
      painted_count: 1,
      journal_seq: (seq = 1), // the transport repeats itself
      painted: [0],
    }));
    session.register("m", tinyMesh());
    await session.submit(req([5, 5, 5]));
    await session.submit(req([7, 7, 7]));
    expect(seq).toBe(1);
    expect(colorsOf(session)[0]).toEqual([5, 5, 5]); // second ack skipped
  });
});

describe("failure handling", () => {
  it("parks strokes on network failure and replays them on retry", async () => {
    let healthy = false;
    const events: SessionEvent[] = [];
    const session = new PaintSession(async (r) => {
      if (!healthy) throw new NetworkError("connection refused");
      return { painted_count: 1, journal_seq: 1, painted: [2] };
    }, (ev) => events.push(ev));
    session.register("m", tinyMesh());

    await session.submit(req([1, 2, 3]));
    expect(session.queuedRetries).toBe(1);
    expect(events).toContainEqual({ kind: "retry-queued", queued: 1 });
    expect(colorsOf(session)[2]).toEqual([200, 200, 200]); // nothing applied

    healthy = true;
    await session.retryNow();
    expect(session.queuedRetries).toBe(0);
    expect(colorsOf(session)[2]).toEqual([1, 2, 3]);
  });

  it("turns a missed seed into a toast and changes nothing", async () => {
    const events: SessionEvent[] = [];
    const session = new PaintSession(async () => {
      throw new ApiError("NoSeedVertex", "no vertex within radius", 409);
    }, (ev) => events.push(ev));
    session.register("m", tinyMesh());

    await session.submit(req([9, 9, 9]));
    expect(events).toEqual([
      { kind: "toast", level: "info", text: "no surface under the pointer" },
    ]);
    expect(session.queuedRetries).toBe(0);
    expect(colorsOf(session).every((c) => c.join() === "200,200,200")).toBe(true);
  });

  it("reports other server rejections as errors", async () => {
    const events: SessionEvent[] = [];
    const session = new PaintSession(async () => {
      throw new ApiError("UnknownMesh", "no mesh xyz", 404);
    }, (ev) => events.push(ev));
    session.register("m", tinyMesh());
    await session.submit(req([9, 9, 9]));
    expect(events[0]).toEqual({ kind: "toast", level: "error", text: "paint failed: no mesh xyz" });
  });
});
