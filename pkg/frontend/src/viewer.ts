/**
 * Wires the state store, the scene, the paint session and the DOM
 * controls together. All interactions funnel through the store's event
 * queue; nothing mutates viewer state directly.
 */

import { orbitForBounds, orbitFromPose, panOrbit, poseFromOrbit, clampOrbit, type Orbit } from "./camera.js";
import { ApiClient, ApiError } from "./api.js";
import { PaintSession, type SessionEvent } from "./paint.js";
import type { PickHit, SceneView } from "./scene.js";
import { Store } from "./store.js";
import type { Tool } from "./state.js";
import type { AnnotationRecord, ProjectManifest } from "./types.js";

export { Store } from "./store.js";

function $<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function rgbToHex([r, g, b]: [number, number, number]): string {
  return "#" + [r, g, b].map((c) => c.toString(16).padStart(2, "0")).join("");
}

function hexToRgb(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 255, (v >> 8) & 255, v & 255];
}

export class ViewerApp {
  private orbit: Orbit;
  private minDolly: number;
  private drag: { kind: "orbit" | "pan"; x: number; y: number; moved: boolean } | null = null;
  private renderQueued = false;
  private retryTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly store: Store,
    private readonly scene: SceneView,
    private readonly api: ApiClient,
    private readonly session: PaintSession,
    private readonly manifest: ProjectManifest,
  ) {
    const b = scene.bounds();
    this.orbit = orbitForBounds(b.min, b.max);
    this.minDolly = this.orbit.distance * 0.02;
    this.bindControls();
    this.bindPointer();
    store.subscribe(() => this.onState());
    store.dispatch({ type: "set-pose", pose: poseFromOrbit(this.orbit) });
    this.syncControls();
    this.requestRender();
    void this.refreshAnnotations();
  }

  onSessionEvent(ev: SessionEvent): void {
    if (ev.kind === "recolor") {
      this.scene.recolor(ev.meshId);
      this.requestRender();
    } else if (ev.kind === "toast") {
      this.toast(ev.text, ev.level);
    } else if (ev.kind === "retry-queued") {
      this.toast(`network trouble, ${ev.queued} stroke(s) queued for retry`, "error");
      $<HTMLButtonElement>("retry-btn").hidden = false;
      if (!this.retryTimer) {
        this.retryTimer = setInterval(() => void this.retryQueued(), 5000);
      }
    }
  }

  private async retryQueued(): Promise<void> {
    await this.session.retryNow();
    if (this.session.queuedRetries === 0) {
      $<HTMLButtonElement>("retry-btn").hidden = true;
      if (this.retryTimer) {
        clearInterval(this.retryTimer);
        this.retryTimer = null;
      }
      this.toast("queued strokes delivered", "info");
    }
  }

  toast(text: string, level: "info" | "error" = "info"): void {
    const area = $<HTMLDivElement>("toast-area");
    const div = document.createElement("div");
    div.className = `toast toast-${level}`;
    div.textContent = text;
    area.appendChild(div);
    setTimeout(() => div.remove(), 4200);
  }

  private onState(): void {
    this.syncControls();
    this.requestRender();
  }

  /** External redraw request (texture arrived, canvas resized). */
  redraw(): void {
    this.requestRender();
  }

  private requestRender(): void {
    if (this.renderQueued) return;
    this.renderQueued = true;
    requestAnimationFrame(() => {
      this.renderQueued = false;
      this.scene.apply(this.store.state);
      this.scene.render();
    });
  }

  // ------------------------------------------------------------- controls

  private bindControls(): void {
    const store = this.store;

    const meshList = $<HTMLDivElement>("mesh-list");
    for (const m of this.manifest.meshes) {
      const row = document.createElement("div");
      row.className = "mesh-row";
      const cb = document.createElement("input");
      cb.type = "checkbox";
      cb.checked = this.store.state.visible.has(m.id);
      cb.addEventListener("change", () =>
        store.dispatch({ type: "set-mesh-visible", id: m.id, visible: cb.checked }),
      );
      const name = document.createElement("span");
      name.textContent = m.name;
      name.title = `${m.vertex_count.toLocaleString()} vertices`;
      const op = document.createElement("input");
      op.type = "range";
      op.min = "0";
      op.max = "1";
      op.step = "0.01";
      op.value = "1";
      op.addEventListener("input", () =>
        store.dispatch({ type: "set-mesh-opacity", id: m.id, value: Number(op.value) }),
      );
      row.append(cb, name, op);
      row.dataset.meshId = m.id;
      meshList.appendChild(row);
    }

    const sections = this.manifest.stack.count;
    const slider = $<HTMLInputElement>("section-slider");
    slider.min = "0";
    slider.max = String(Math.max(0, sections - 1));
    slider.addEventListener("input", () =>
      store.dispatch({ type: "set-section-index", index: Number(slider.value) }),
    );
    $<HTMLButtonElement>("section-prev").addEventListener("click", () =>
      store.dispatch({ type: "step-section", delta: -1 }),
    );
    $<HTMLButtonElement>("section-next").addEventListener("click", () =>
      store.dispatch({ type: "step-section", delta: 1 }),
    );
    const secOp = $<HTMLInputElement>("section-opacity");
    secOp.addEventListener("input", () =>
      store.dispatch({ type: "set-section-opacity", value: Number(secOp.value) }),
    );
    const ffc = $<HTMLInputElement>("section-ffc");
    ffc.addEventListener("change", () =>
      store.dispatch({ type: "set-front-face-culling", value: ffc.checked }),
    );

    const clip = $<HTMLInputElement>("clip-slider");
    const diagM = this.sceneDiagM();
    clip.min = String(this.storeLimitsNearMin());
    clip.max = String(Math.max(1.5, diagM * 1.5).toFixed(2));
    clip.step = "0.01";
    clip.addEventListener("input", () =>
      store.dispatch({ type: "set-clip", value: Number(clip.value) }),
    );

    for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-tool]")) {
      btn.addEventListener("click", () =>
        store.dispatch({ type: "set-tool", tool: btn.dataset.tool as Tool }),
      );
    }
    const radius = $<HTMLInputElement>("tool-radius");
    radius.addEventListener("input", () =>
      store.dispatch({ type: "set-tool-radius", value: Number(radius.value) }),
    );
    const color = $<HTMLInputElement>("tool-color");
    color.addEventListener("input", () =>
      store.dispatch({ type: "set-tool-color", color: hexToRgb(color.value) }),
    );

    $<HTMLButtonElement>("bg-toggle").addEventListener("click", () =>
      store.dispatch({
        type: "set-background",
        value: store.state.background === "dark" ? "light" : "dark",
      }),
    );

    $<HTMLButtonElement>("retry-btn").addEventListener("click", () => void this.retryQueued());

    $<HTMLButtonElement>("shot-btn").addEventListener("click", () => void this.screenshot());
  }

  private storeLimitsNearMin(): number {
    return 0.01;
  }

  private sceneDiagM(): number {
    const b = this.scene.bounds();
    const d = Math.hypot(b.max[0] - b.min[0], b.max[1] - b.min[1], b.max[2] - b.min[2]);
    return (d * this.manifest.defaults.world_scale_m_per_mm) / 1000;
  }

  private syncControls(): void {
    const s = this.store.state;
    $<HTMLInputElement>("section-slider").value = String(s.sectionIndex);
    $<HTMLSpanElement>("section-label").textContent =
      `${s.sectionIndex + 1} / ${this.manifest.stack.count}`;
    $<HTMLInputElement>("section-opacity").value = String(s.sectionOpacity);
    $<HTMLInputElement>("section-ffc").checked = s.sectionFrontFaceCulling;
    $<HTMLInputElement>("clip-slider").value = String(s.clipDistance);
    $<HTMLSpanElement>("clip-value").textContent = `${s.clipDistance.toFixed(2)} m`;
    $<HTMLInputElement>("tool-radius").value = String(s.toolRadius);
    $<HTMLInputElement>("tool-color").value = rgbToHex(s.toolColor);
    for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-tool]")) {
      btn.classList.toggle("active", btn.dataset.tool === s.tool);
    }
    for (const row of document.querySelectorAll<HTMLDivElement>(".mesh-row")) {
      const id = row.dataset.meshId!;
      row.querySelector<HTMLInputElement>("input[type=checkbox]")!.checked = s.visible.has(id);
      row.querySelector<HTMLInputElement>("input[type=range]")!.value = String(s.meshOpacity[id] ?? 1);
    }
    document.body.classList.toggle("light", s.background === "light");
  }

  // -------------------------------------------------------------- pointer

  private ndc(ev: PointerEvent | WheelEvent): [number, number] {
    const rect = this.scene.canvas.getBoundingClientRect();
    return [
      ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      -((ev.clientY - rect.top) / rect.height) * 2 + 1,
    ];
  }

  private bindPointer(): void {
    const canvas = this.scene.canvas;
    canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());

    canvas.addEventListener("pointerdown", (ev) => {
      canvas.setPointerCapture(ev.pointerId);
      const pan = ev.button === 1 || ev.button === 2 || ev.shiftKey;
      this.drag = { kind: pan ? "pan" : "orbit", x: ev.clientX, y: ev.clientY, moved: false };
    });

    canvas.addEventListener("pointermove", (ev) => {
      if (this.drag) {
        const dx = ev.clientX - this.drag.x;
        const dy = ev.clientY - this.drag.y;
        if (Math.abs(dx) + Math.abs(dy) > 3) this.drag.moved = true;
        this.drag.x = ev.clientX;
        this.drag.y = ev.clientY;
        if (this.drag.kind === "orbit") {
          this.orbit = clampOrbit(
            { ...this.orbit, azimuth: this.orbit.azimuth - dx * 0.006, elevation: this.orbit.elevation + dy * 0.006 },
            this.minDolly,
          );
        } else {
          const k = this.orbit.distance * 0.0016;
          this.orbit = panOrbit(this.orbit, dx * k, dy * k);
        }
        this.store.dispatch({ type: "set-pose", pose: poseFromOrbit(this.orbit) });
        return;
      }
      if (this.store.state.tool !== "navigate") {
        const [x, y] = this.ndc(ev);
        const hit = this.scene.pick(x, y, this.store.state);
        this.scene.setBeacon(hit ? hit.point : null, this.store.state.toolRadius, this.store.state.toolColor);
        this.requestRender();
      }
    });

    canvas.addEventListener("pointerup", (ev) => {
      const wasClick = this.drag !== null && !this.drag.moved && ev.button === 0;
      this.drag = null;
      if (!wasClick || this.store.state.tool === "navigate") return;
      const [x, y] = this.ndc(ev);
      const hit = this.scene.pick(x, y, this.store.state);
      if (!hit) {
        this.toast("no surface under the pointer");
        return;
      }
      if (this.store.state.tool === "paint") void this.paintAt(hit);
      else void this.annotateAt(hit);
    });

    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = Math.exp(ev.deltaY * 0.0012);
      this.orbit = clampOrbit({ ...this.orbit, distance: this.orbit.distance * factor }, this.minDolly);
      this.store.dispatch({ type: "set-pose", pose: poseFromOrbit(this.orbit) });
    }, { passive: false });
  }

  private async paintAt(hit: PickHit): Promise<void> {
    const s = this.store.state;
    await this.session.submit({
      mesh_id: hit.meshId,
      seed_point: hit.seed,
      tool_radius_um: s.toolRadius,
      color: s.toolColor,
    });
  }

  private async annotateAt(hit: PickHit): Promise<void> {
    const s = this.store.state;
    const label = $<HTMLInputElement>("ann-label").value.trim();
    try {
      await this.api.addAnnotation({
        position: hit.point,
        radius_um: s.toolRadius,
        label,
        color: s.toolColor,
        view_transform: s.pose,
      });
      await this.refreshAnnotations();
    } catch (err) {
      this.toast(err instanceof ApiError ? `annotation failed: ${err.message}` : "annotation failed", "error");
    }
  }

  // ---------------------------------------------------------- annotations

  async refreshAnnotations(): Promise<void> {
    let records: AnnotationRecord[];
    try {
      records = await this.api.annotations();
    } catch {
      this.toast("could not load annotations", "error");
      return;
    }
    this.scene.setAnnotations(records);
    const list = $<HTMLDivElement>("ann-list");
    list.textContent = "";
    for (const ann of records) {
      const row = document.createElement("div");
      row.className = "ann-row";
      const name = document.createElement("span");
      name.textContent = ann.label || `marker ${ann.id}`;
      name.title = `section ${ann.section_index + 1}, by ${ann.author || "unknown"}`;
      const go = document.createElement("button");
      go.textContent = "go";
      go.addEventListener("click", () => this.goToAnnotation(ann));
      const del = document.createElement("button");
      del.textContent = "x";
      del.addEventListener("click", () => void this.deleteAnnotation(ann.id));
      row.append(name, go, del);
      list.appendChild(row);
    }
    this.requestRender();
  }

  goToAnnotation(ann: AnnotationRecord): void {
    this.store.dispatch({
      type: "go-to-annotation",
      pose: ann.view_transform,
      sectionIndex: ann.section_index,
    });
    // keep navigating from where the stored pose put us
    this.orbit = clampOrbit(orbitFromPose(this.store.state.pose, this.orbit.distance), this.minDolly);
  }

  private async deleteAnnotation(id: number): Promise<void> {
    try {
      await this.api.deleteAnnotation(id);
    } catch {
      this.toast("delete failed", "error");
      return;
    }
    await this.refreshAnnotations();
  }

  private async screenshot(): Promise<void> {
    const blob = await this.scene.screenshot();
    if (!blob) {
      this.toast("screenshot failed", "error");
      return;
    }
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `${this.manifest.name.replaceAll(" ", "_")}.png`;
    a.click();
    setTimeout(() => URL.revokeObjectURL(a.href), 10_000);
  }
}
