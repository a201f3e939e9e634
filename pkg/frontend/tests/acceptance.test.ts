/**
 * Release gate for the viewer. Two checks, each printing one line:
 *
 *   [ACCEPTANCE] <name>: PASS|FAIL
 *
 * viewer_state_rules sweeps every state transition over its boundary
 * cases against independently restated clamp/identity rules.
 *
 * viewer_reconciliation drives 25 scripted paint/annotate actions against
 * a real service process and requires the locally patched colour buffer
 * to hash identically to GET /api/export, plus a bit-exact camera pose
 * round-trip through an annotation.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

import { ApiClient } from "../src/api.js";
import { PaintSession, type SessionEvent } from "../src/paint.js";
import { sha256Hex } from "../src/ply.js";
import {
  NEAR_MIN_M,
  TOOL_RADIUS_MIN_UM,
  identityPose,
  initialState,
  limitsFrom,
  reduce,
  type Background,
  type Limits,
  type Tool,
  type ViewerState,
} from "../src/state.js";
import type { ProjectManifest } from "../src/types.js";
import { fakeManifest, lcg } from "./helpers.js";

const execFileAsync = promisify(execFile);
const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = resolve(here, "..", "..");

let checksRun = 0;

function check(failures: string[], ok: boolean, message: string): void {
  checksRun += 1;
  if (!ok) failures.push(message);
}

async function criterion(name: string, body: (failures: string[]) => Promise<void> | void) {
  const failures: string[] = [];
  try {
    await body(failures);
  } catch (err) {
    console.log(`\n[ACCEPTANCE] ${name}: FAIL`);
    throw err;
  }
  console.log(`\n[ACCEPTANCE] ${name}: ${failures.length === 0 ? "PASS" : "FAIL"}`);
  expect(failures, failures.slice(0, 12).join("; ")).toEqual([]);
}

// ---------------------------------------------------------------- criterion 1

describe("state transition rules", () => {
  const manifest = fakeManifest();

  function sweepClipping(failures: string[], limits: Limits, base: ViewerState): void {
    const starts = [limits.nearMin, 0.02, 0.6, 5];
    const sets = [
      -3, -1e-4, 0, limits.nearMin - 1e-9, limits.nearMin, limits.nearMin + 1e-9,
      0.25, 0.6, 1e6, Infinity, -Infinity, NaN,
    ];
    for (const start of starts) {
      const s0 = { ...base, clipDistance: start };
      for (const v of sets) {
        const want = Number.isFinite(v) ? Math.max(limits.nearMin, v) : start;
        const s1 = reduce(s0, { type: "set-clip", value: v }, limits);
        check(failures, s1.clipDistance === want, `set-clip ${v} from ${start}: ${s1.clipDistance} != ${want}`);
        if (want === start) check(failures, s1 === s0, `set-clip ${v} from ${start}: expected identity`);
      }
      const deltas = [-1e9, -start, -(start - limits.nearMin), 0, 1e-9, 0.4, 1e9, NaN, Infinity, -Infinity];
      for (const d of deltas) {
        const want = Number.isFinite(d) ? Math.max(limits.nearMin, start + d) : start;
        const s1 = reduce(s0, { type: "adjust-clip", delta: d }, limits);
        check(failures, s1.clipDistance === want, `adjust-clip ${d} from ${start}: ${s1.clipDistance} != ${want}`);
        if (want === start) check(failures, s1 === s0, `adjust-clip ${d} from ${start}: expected identity`);
      }
    }
  }

  function sweepOpacity(failures: string[], limits: Limits, base: ViewerState): void {
    const values = [-1, -1e-9, 0, 1e-9, 0.25, 0.5, 1 - 1e-9, 1, 1 + 1e-9, 2, 255, NaN, Infinity, -Infinity];
    const clamp01 = (v: number) => Math.min(1, Math.max(0, v));
    for (const id of ["a", "b"]) {
      for (const start of [0, 0.5, 1]) {
        const s0 = { ...base, meshOpacity: { ...base.meshOpacity, [id]: start } };
        for (const v of values) {
          const want = Number.isFinite(v) ? clamp01(v) : start;
          const s1 = reduce(s0, { type: "set-mesh-opacity", id, value: v }, limits);
          check(failures, s1.meshOpacity[id] === want, `opacity(${id}) ${v} from ${start}: ${s1.meshOpacity[id]} != ${want}`);
          if (want === start) check(failures, s1 === s0, `opacity(${id}) ${v} from ${start}: expected identity`);
        }
      }
    }
    for (const v of values) {
      const s1 = reduce(base, { type: "set-mesh-opacity", id: "zz", value: v }, limits);
      check(failures, s1 === base, `opacity on unknown mesh must be identity (value ${v})`);
    }
    for (const start of [0, 0.5, 1]) {
      const s0 = { ...base, sectionOpacity: start };
      for (const v of values) {
        const want = Number.isFinite(v) ? clamp01(v) : start;
        const s1 = reduce(s0, { type: "set-section-opacity", value: v }, limits);
        check(failures, s1.sectionOpacity === want, `section opacity ${v} from ${start}: ${s1.sectionOpacity} != ${want}`);
        if (want === start) check(failures, s1 === s0, `section opacity ${v} from ${start}: expected identity`);
      }
    }
  }

  function sweepSections(failures: string[], base: ViewerState): void {
    const clampTo = (v: number, count: number) => Math.max(0, Math.min(Math.trunc(v), count - 1));
    for (const count of [1, 2, 8]) {
      const limits: Limits = { sectionCount: count, nearMin: NEAR_MIN_M, meshIds: new Set(["a", "b"]) };
      for (let start = 0; start < count; start++) {
        const s0 = { ...base, sectionIndex: start };
        for (const d of [-100, -2, -1, -0.9, 0, 0.9, 1, 2, 2.9, 100, NaN]) {
          const want = Number.isFinite(d) ? clampTo(start + Math.trunc(d), count) : start;
          const s1 = reduce(s0, { type: "step-section", delta: d }, limits);
          check(failures, s1.sectionIndex === want, `step ${d} from ${start}/${count}: ${s1.sectionIndex} != ${want}`);
          if (want === start) check(failures, s1 === s0, `step ${d} from ${start}/${count}: expected identity`);
        }
        for (const v of [-5, -1, 0, count - 1, count, count + 5, 3.7, NaN]) {
          const want = Number.isFinite(v) ? clampTo(v, count) : start;
          const s1 = reduce(s0, { type: "set-section-index", index: v }, limits);
          check(failures, s1.sectionIndex === want, `set-section ${v} from ${start}/${count}: ${s1.sectionIndex} != ${want}`);
          if (want === start) check(failures, s1 === s0, `set-section ${v} from ${start}/${count}: expected identity`);
        }
      }
    }
  }

  function sweepTools(failures: string[], limits: Limits, base: ViewerState): void {
    const tools: Tool[] = ["navigate", "annotate", "paint"];
    for (const from of tools) {
      const s0 = { ...base, tool: from };
      for (const to of tools) {
        const s1 = reduce(s0, { type: "set-tool", tool: to }, limits);
        check(failures, s1.tool === to, `tool ${from}->${to}: got ${s1.tool}`);
        if (from === to) {
          check(failures, s1 === s0, `tool ${from}->${to}: expected identity`);
        } else {
          const rest = { ...s1, tool: from };
          check(
            failures,
            JSON.stringify({ ...rest, visible: [...rest.visible] }) ===
              JSON.stringify({ ...s0, visible: [...s0.visible] }),
            `tool ${from}->${to}: other fields changed`,
          );
        }
      }
    }
    const backgrounds: Background[] = ["light", "dark"];
    for (const from of backgrounds) {
      const s0 = { ...base, background: from };
      for (const to of backgrounds) {
        const s1 = reduce(s0, { type: "set-background", value: to }, limits);
        check(failures, s1.background === to, `background ${from}->${to}`);
        if (from === to) check(failures, s1 === s0, `background ${from}->${to}: expected identity`);
      }
    }
    for (const from of [false, true]) {
      const s0 = { ...base, sectionFrontFaceCulling: from };
      for (const to of [false, true]) {
        const s1 = reduce(s0, { type: "set-front-face-culling", value: to }, limits);
        check(failures, s1.sectionFrontFaceCulling === to, `ffc ${from}->${to}`);
        if (from === to) check(failures, s1 === s0, `ffc ${from}->${to}: expected identity`);
      }
    }
    for (const v of [-5, 0, TOOL_RADIUS_MIN_UM - 1e-9, TOOL_RADIUS_MIN_UM, 0.2, 500, NaN]) {
      const want = Number.isFinite(v) ? Math.max(TOOL_RADIUS_MIN_UM, v) : base.toolRadius;
      const s1 = reduce(base, { type: "set-tool-radius", value: v }, limits);
      check(failures, s1.toolRadius === want, `tool radius ${v}: ${s1.toolRadius} != ${want}`);
    }
    const colorCases: Array<[[number, number, number], [number, number, number] | null]> = [
      [[0, 0, 0], [0, 0, 0]],
      [[255, 255, 255], [255, 255, 255]],
      [[-1, 128, 300], [0, 128, 255]],
      [[12.4, 12.5, 12.6], [12, 13, 13]],
      [[NaN, 0, 0], null], // identity
    ];
    for (const [input, want] of colorCases) {
      const s1 = reduce(base, { type: "set-tool-color", color: input }, limits);
      if (want === null) {
        check(failures, s1 === base, `colour ${input}: expected identity`);
      } else {
        check(failures, s1.toolColor.join() === want.join(), `colour ${input}: got ${s1.toolColor}`);
      }
    }
  }

  function sweepVisibility(failures: string[], limits: Limits, base: ViewerState): void {
    for (const id of ["a", "b"]) {
      for (const start of [false, true]) {
        const visible = new Set(base.visible);
        if (start) visible.add(id);
        else visible.delete(id);
        const s0 = { ...base, visible };
        for (const to of [false, true]) {
          const s1 = reduce(s0, { type: "set-mesh-visible", id, visible: to }, limits);
          check(failures, s1.visible.has(id) === to, `visible(${id}) ${start}->${to}`);
          if (start === to) check(failures, s1 === s0, `visible(${id}) ${start}->${to}: expected identity`);
        }
      }
    }
    check(
      failures,
      reduce(base, { type: "set-mesh-visible", id: "zz", visible: true }, limits) === base,
      "visibility of unknown mesh must be identity",
    );
  }

  function sweepGoTo(failures: string[], limits: Limits, base: ViewerState): void {
    const pose = [
      [0.7071067811865476, 0.1234567890123456, -0.3333333333333333, 102.5],
      [0.0000000001, 0.9876543210987654, 0.2886751345948129, -55.125],
      [0.5773502691896258, 0.4444444444444444, 0.6666666666666666, 7.000000000000001],
      [0, 0, 0, 1],
    ];
    for (const [index, want] of [[-1, 0], [0, 0], [3, 3], [7, 7], [8, 7], [99, 7]] as const) {
      const s1 = reduce(base, { type: "go-to-annotation", pose, sectionIndex: index }, limits);
      check(failures, s1.sectionIndex === want, `go-to section ${index}: ${s1.sectionIndex} != ${want}`);
      let exact = true;
      for (let r = 0; r < 4; r++) {
        for (let c = 0; c < 4; c++) {
          if (!Object.is(s1.pose[r][c], pose[r][c])) exact = false;
        }
      }
      check(failures, exact, `go-to section ${index}: pose not bit-exact`);
      check(failures, s1.pose !== pose && s1.pose[0] !== pose[0], "go-to must copy, not alias");
    }
  }

  it("viewer_state_rules", async () => {
    await criterion("viewer_state_rules", (failures) => {
      const limits = limitsFrom(manifest);
      const base = initialState(manifest, limits);
      sweepClipping(failures, limits, base);
      sweepOpacity(failures, limits, base);
      sweepSections(failures, base);
      sweepTools(failures, limits, base);
      sweepVisibility(failures, limits, base);
      sweepGoTo(failures, limits, base);
      check(failures, checksRun >= 600, `sweep too small: ${checksRun} checks`);
    });
  });
});

// ---------------------------------------------------------------- criterion 2

function freePort(): Promise<number> {
  return new Promise((res, rej) => {
    const srv = net.createServer();
    srv.once("error", rej);
    srv.listen(0, "127.0.0.1", () => {
      const { port } = srv.address() as net.AddressInfo;
      srv.close(() => res(port));
    });
  });
}

describe("live service reconciliation", () => {
  let tmp: string;
  let server: ChildProcess | null = null;
  let stderrBuf = "";
  let api: ApiClient;
  let manifest: ProjectManifest;

  beforeAll(async () => {
    tmp = mkdtempSync(join(tmpdir(), "histoscope-ui-"));
    const proj = join(tmp, "proj");
    await execFileAsync("python3", [join(repoRoot, "demos", "make_demo_project.py"), proj], {
      cwd: repoRoot,
      timeout: 180_000,
    });

    const port = await freePort();
    server = spawn(
      "python3",
      [
        "-m", "histoscope.cli", "serve",
        "--config", join(proj, "project.json"),
        "--bind", `127.0.0.1:${port}`,
        "--log-level", "warning",
      ],
      { cwd: repoRoot, stdio: ["ignore", "ignore", "pipe"] },
    );
    server.stderr!.on("data", (chunk) => (stderrBuf += chunk));

    const url = `http://127.0.0.1:${port}`;
    const deadline = Date.now() + 60_000;
    for (;;) {
      if (server.exitCode !== null) {
        throw new Error(`server exited with ${server.exitCode}\n${stderrBuf}`);
      }
      try {
        const resp = await fetch(`${url}/api/project`);
        if (resp.ok) break;
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error(`server not ready\n${stderrBuf}`);
      await new Promise((r) => setTimeout(r, 250));
    }
    api = new ApiClient(url);
    manifest = await api.project();
  });

  afterAll(() => {
    server?.kill("SIGKILL");
    rmSync(tmp, { recursive: true, force: true });
  });

  it("viewer_reconciliation", async () => {
    await criterion("viewer_reconciliation", async (failures) => {
      const events: SessionEvent[] = [];
      const session = new PaintSession((req) => api.paint(req), (ev) => events.push(ev));
      for (const entry of manifest.meshes) {
        session.register(entry.id, await api.meshBytes(entry.id));
      }

      const rand = lcg(0xbeef01);
      const randFloat = () => rand() / 2 ** 32;
      const vertexPos = (meshId: string, v: number): [number, number, number] => {
        const p = session.mesh(meshId).positions;
        return [p[3 * v], p[3 * v + 1], p[3 * v + 2]];
      };
      const randColor = (): [number, number, number] => [rand() % 256, rand() % 256, rand() % 256];

      // the pose that must survive the server round-trip bit for bit
      const specialPose = [
        [Math.SQRT1_2, 0, Math.SQRT1_2, 12.345000000000001],
        [0.1234567890123456, 0.9876543210987654, -0.3333333333333333, -7.25],
        [-Math.SQRT1_2, 0.2886751345948129, 0.6666666666666666, 55.5],
        [0, 0, 0, 1],
      ];

      const annotateAt = new Set([3, 7, 10, 14, 19, 22, 24]);
      const salvo: Array<Promise<void>> = [];
      let actions = 0;

      for (let i = 0; i < 25; i++) {
        actions += 1;
        if (annotateAt.has(i)) {
          if (salvo.length) {
            await Promise.all(salvo); // let racing strokes settle first
            salvo.length = 0;
          }
          const special = i === 7;
          const v = rand() % manifest.meshes.find((m) => m.id === "vessels")!.vertex_count;
          const ann = await api.addAnnotation({
            position: special ? [30.25, 22.5, 10.5] : vertexPos("vessels", v),
            radius_um: 2 + 3 * randFloat(),
            label: `mark ${i}`,
            color: randColor(),
            view_transform: special
              ? specialPose
              : [
                  [1, 0, 0, randFloat() * 100],
                  [0, 1, 0, randFloat() * 100],
                  [0, 0, 1, randFloat() * 100],
                  [0, 0, 0, 1],
                ],
            author: "gate",
          });
          check(failures, ann.label === `mark ${i}`, `annotation ${i} echoed wrong label`);
          continue;
        }

        const meshId = i === 5 || i === 16 ? "ball" : "vessels";
        const count = manifest.meshes.find((m) => m.id === meshId)!.vertex_count;
        const overlapBase = 11 <= i && i <= 12 ? 31337 % count : rand() % count;
        const req = {
          mesh_id: meshId,
          seed_point: vertexPos(meshId, overlapBase),
          tool_radius_um: 1 + 7 * randFloat(),
          color: randColor(),
          author: "gate",
        };
        if (11 <= i && i <= 13) {
          salvo.push(session.submit(req)); // deliberate race, settled above
        } else {
          await session.submit(req);
        }
      }
      if (salvo.length) await Promise.all(salvo);

      check(failures, actions === 25, `ran ${actions} actions, want 25`);
      const recolors = events.filter((e) => e.kind === "recolor").length;
      check(failures, recolors === 18, `expected 18 applied strokes, saw ${recolors}`);

      for (const entry of manifest.meshes) {
        const local = await session.localDigest(entry.id);
        const exported = new Uint8Array(await api.exportBytes(entry.id));
        const remote = await sha256Hex(exported);
        check(
          failures,
          local === remote,
          `${entry.id}: local colour digest ${local.slice(0, 12)} != export ${remote.slice(0, 12)}`,
        );
      }

      // go-to-annotation: stored pose comes back bit-exact, section correct
      const anns = await api.annotations();
      check(failures, anns.length === 8, `expected 8 annotations (7 new + 1 seeded), got ${anns.length}`);
      const special = anns.find((a) => a.label === "mark 7");
      check(failures, special !== undefined, "mark 7 missing from the listing");
      if (special) {
        check(failures, special.section_index === 1, `z=10.5 at t=7 must store section 1, got ${special.section_index}`);
        const limits = limitsFrom(manifest);
        const s0 = initialState(manifest, limits);
        const s1 = reduce(
          s0,
          { type: "go-to-annotation", pose: special.view_transform, sectionIndex: special.section_index },
          limits,
        );
        check(failures, s1.sectionIndex === 1, `go-to set section ${s1.sectionIndex}, want 1`);
        for (let r = 0; r < 4; r++) {
          for (let c = 0; c < 4; c++) {
            check(
              failures,
              Object.is(s1.pose[r][c], specialPose[r][c]),
              `pose[${r}][${c}] not bit-exact: ${s1.pose[r][c]} != ${specialPose[r][c]}`,
            );
          }
        }
      }

      // a stroke that misses the surface must toast and change nothing
      const before = await session.localDigest("vessels");
      await session.submit({
        mesh_id: "vessels",
        seed_point: [99999, 99999, 99999],
        tool_radius_um: 1,
        color: [1, 2, 3],
        author: "gate",
      });
      check(
        failures,
        events.some((e) => e.kind === "toast" && e.level === "info"),
        "missed seed did not toast",
      );
      check(failures, (await session.localDigest("vessels")) === before, "missed seed changed local bytes");
    });
  });
});
