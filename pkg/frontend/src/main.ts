// Boot: pull the manifest, download and parse every mesh, then hand
// everything to the app. Served by the inspection service under /ui/, so
// all API calls are same-origin.

import { ApiClient } from "./api.js";
import { PaintSession } from "./paint.js";
import { SceneView } from "./scene.js";
import { initialState, limitsFrom } from "./state.js";
import { Store, ViewerApp } from "./viewer.js";
import type { ParsedMesh } from "./ply.js";

function overlay(text: string | null): void {
  const el = document.getElementById("overlay")!;
  if (text === null) {
    el.hidden = true;
  } else {
    el.hidden = false;
    el.textContent = text;
  }
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  overlay("loading project…");
  const manifest = await api.project();
  document.getElementById("project-name")!.textContent = manifest.name;
  document.title = `${manifest.name} · histoscope`;

  const session = new PaintSession(
    (req) => api.paint(req),
    (ev) => app?.onSessionEvent(ev),
  );
  const meshes = new Map<string, ParsedMesh>();
  for (const entry of manifest.meshes) {
    overlay(`loading ${entry.name}…`);
    const buf = await api.meshBytes(entry.id);
    meshes.set(entry.id, session.register(entry.id, buf));
  }

  const canvas = document.getElementById("view") as HTMLCanvasElement;
  let damage: () => void = () => {};
  const scene = new SceneView(
    canvas,
    manifest,
    meshes,
    (index) => api.sectionBlob(index),
    () => damage(),
  );

  const limits = limitsFrom(manifest);
  const store = new Store(initialState(manifest, limits), limits);
  let app: ViewerApp | null = null;
  app = new ViewerApp(store, scene, api, session, manifest);
  damage = () => app?.redraw();

  const holder = canvas.parentElement!;
  const fit = () => {
    scene.resize(holder.clientWidth, holder.clientHeight);
    app?.redraw();
  };
  new ResizeObserver(fit).observe(holder);
  fit();

  canvas.addEventListener("webglcontextlost", () => {
    overlay("rendering context lost; reload the page");
  });

  overlay(null);
}

boot().catch((err) => {
  console.error(err);
  overlay(`failed to start: ${err?.message ?? err}`);
});
