/**
 * Rendering layer: turns the current ViewerState into a three.js scene.
 *
 * Everything here is presentation; no viewer logic lives in this file.
 * Scene units are micrometres (mesh coordinates). The clip distance in
 * the state is world metres and is converted with the project's
 * world-scale hint before it becomes the camera near plane.
 */

import * as THREE from "three";
import type { ParsedMesh } from "./ply.js";
import type { Mat4, ViewerState } from "./state.js";
import type { AnnotationRecord, ProjectManifest } from "./types.js";

export interface PickHit {
  meshId: string;
  point: [number, number, number];
  /** Position of the face corner nearest the hit, straight from the vertex buffer. */
  seed: [number, number, number];
  vertexIndex: number;
}

const MESH_LAYER = 1;

export class SceneView {
  readonly canvas: HTMLCanvasElement;
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private meshGroup = new THREE.Group();
  private annGroup = new THREE.Group();
  private meshObjects = new Map<string, THREE.Mesh>();
  private colorAttrs = new Map<string, THREE.BufferAttribute>();
  private sectionBox: THREE.Mesh;
  private sectionMaterials: THREE.MeshBasicMaterial[];
  private sectionTextures = new Map<number, THREE.Texture>();
  private sectionLoading = new Set<number>();
  private shownSection = -1;
  private beacon: THREE.Mesh;
  private raycaster = new THREE.Raycaster();
  private umPerMetre: number;
  private sceneDiag: number;

  constructor(
    canvas: HTMLCanvasElement,
    private readonly manifest: ProjectManifest,
    meshes: ReadonlyMap<string, ParsedMesh>,
    private readonly fetchSection: (index: number) => Promise<Blob>,
    private readonly onDamage: () => void,
  ) {
    this.canvas = canvas;
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio || 1);
    this.umPerMetre = 1000 / manifest.defaults.world_scale_m_per_mm;

    this.camera = new THREE.PerspectiveCamera(50, 1, 1, 1e5);
    this.camera.matrixAutoUpdate = false;

    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x555566, 1.1));
    const key = new THREE.DirectionalLight(0xffffff, 1.4);
    key.position.set(0.4, -1, 0.6);
    this.scene.add(key);

    for (const entry of manifest.meshes) {
      const parsed = meshes.get(entry.id);
      if (!parsed) continue;
      const geo = new THREE.BufferGeometry();
      geo.setAttribute("position", new THREE.BufferAttribute(parsed.positions, 3));
      if (parsed.normals) {
        geo.setAttribute("normal", new THREE.BufferAttribute(parsed.normals, 3));
      } else {
        geo.computeVertexNormals();
      }
      const colorAttr = new THREE.BufferAttribute(parsed.colors, 3, true);
      geo.setAttribute("color", colorAttr);
      geo.setIndex(new THREE.BufferAttribute(parsed.indices, 1));
      const mat = new THREE.MeshLambertMaterial({
        vertexColors: true,
        side: THREE.FrontSide, // back faces culled
      });
      const obj = new THREE.Mesh(geo, mat);
      obj.name = entry.id;
      obj.layers.enable(MESH_LAYER);
      this.meshGroup.add(obj);
      this.meshObjects.set(entry.id, obj);
      this.colorAttrs.set(entry.id, colorAttr);
    }
    this.scene.add(this.meshGroup);
    this.scene.add(this.annGroup);

    const st = manifest.stack;
    const w = st.width_px * st.pitch;
    const h = st.height_px * st.pitch;
    const boxGeo = new THREE.BoxGeometry(w, h, st.thickness);
    const plain = () => new THREE.MeshBasicMaterial({ color: 0x888888 });
    this.sectionMaterials = [plain(), plain(), plain(), plain(), plain(), plain()];
    this.sectionBox = new THREE.Mesh(boxGeo, this.sectionMaterials);
    this.scene.add(this.sectionBox);

    this.beacon = new THREE.Mesh(
      new THREE.SphereGeometry(1, 16, 12),
      new THREE.MeshBasicMaterial({ color: 0xffcc44 }),
    );
    this.beacon.visible = false;
    this.scene.add(this.beacon);

    const bounds = new THREE.Box3().setFromObject(this.meshGroup);
    if (bounds.isEmpty()) bounds.set(new THREE.Vector3(0, 0, 0), new THREE.Vector3(w, h, st.thickness * st.count));
    this.sceneDiag = bounds.getSize(new THREE.Vector3()).length() || 100;

    canvas.addEventListener("webglcontextlost", (ev) => {
      ev.preventDefault();
      this.onDamage();
    });
  }

  bounds(): { min: [number, number, number]; max: [number, number, number] } {
    const b = new THREE.Box3().setFromObject(this.meshGroup);
    const st = this.manifest.stack;
    b.expandByPoint(new THREE.Vector3(st.origin[0], st.origin[1], st.origin[2]));
    return {
      min: [b.min.x, b.min.y, b.min.z],
      max: [b.max.x, b.max.y, b.max.z],
    };
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / Math.max(1, height);
    this.camera.updateProjectionMatrix();
  }

  private applyPose(pose: Mat4): void {
    const m = this.camera.matrix;
    m.set(
      pose[0][0], pose[0][1], pose[0][2], pose[0][3],
      pose[1][0], pose[1][1], pose[1][2], pose[1][3],
      pose[2][0], pose[2][1], pose[2][2], pose[2][3],
      pose[3][0], pose[3][1], pose[3][2], pose[3][3],
    );
    m.decompose(this.camera.position, this.camera.quaternion, this.camera.scale);
    this.camera.updateMatrixWorld(true);
  }

  apply(state: ViewerState): void {
    this.applyPose(state.pose);

    const near = Math.max(0.05, state.clipDistance * this.umPerMetre);
    const far = Math.max(near * 2, this.sceneDiag * 12);
    if (near !== this.camera.near || far !== this.camera.far) {
      this.camera.near = near;
      this.camera.far = far;
      this.camera.updateProjectionMatrix();
    }

    this.scene.background = new THREE.Color(state.background === "light" ? 0xf2f1ee : 0x14141a);

    for (const [id, obj] of this.meshObjects) {
      obj.visible = state.visible.has(id);
      const opacity = state.meshOpacity[id] ?? 1;
      const mat = obj.material as THREE.MeshLambertMaterial;
      if (mat.opacity !== opacity) {
        mat.opacity = opacity;
        mat.transparent = opacity < 1;
        mat.depthWrite = opacity >= 0.5;
        mat.needsUpdate = true;
      }
    }

    this.applySection(state);
  }

  private applySection(state: ViewerState): void {
    // opacity zero: nothing submitted at all
    if (state.sectionOpacity <= 0 || this.manifest.stack.count === 0) {
      this.sectionBox.visible = false;
      return;
    }
    this.sectionBox.visible = true;

    const st = this.manifest.stack;
    const w = st.width_px * st.pitch;
    const h = st.height_px * st.pitch;
    this.sectionBox.position.set(
      st.origin[0] + w / 2,
      st.origin[1] + h / 2,
      st.origin[2] + (state.sectionIndex + 0.5) * st.thickness,
    );

    const side = state.sectionFrontFaceCulling ? THREE.BackSide : THREE.FrontSide;
    const transparent = state.sectionOpacity < 1;
    for (const mat of this.sectionMaterials) {
      mat.side = side;
      mat.opacity = state.sectionOpacity;
      mat.transparent = transparent;
      mat.needsUpdate = true;
    }

    if (state.sectionIndex !== this.shownSection) {
      this.shownSection = state.sectionIndex;
      const tex = this.sectionTextures.get(state.sectionIndex);
      if (tex) this.showSectionTexture(tex);
      else void this.loadSection(state.sectionIndex);
    }
  }

  private showSectionTexture(tex: THREE.Texture): void {
    // image on the two z faces, plain grey rim
    this.sectionMaterials[4].map = tex;
    this.sectionMaterials[5].map = tex;
    this.sectionMaterials[4].color.set(0xffffff);
    this.sectionMaterials[5].color.set(0xffffff);
    this.sectionMaterials[4].needsUpdate = true;
    this.sectionMaterials[5].needsUpdate = true;
    this.onDamage();
  }

  private async loadSection(index: number): Promise<void> {
    if (this.sectionLoading.has(index)) return;
    this.sectionLoading.add(index);
    try {
      const blob = await this.fetchSection(index);
      const bitmap = await createImageBitmap(blob);
      const tex = new THREE.Texture(bitmap);
      tex.generateMipmaps = true;
      tex.minFilter = THREE.LinearMipmapLinearFilter;
      tex.magFilter = THREE.LinearFilter;
      tex.colorSpace = THREE.SRGBColorSpace;
      tex.needsUpdate = true;
      this.sectionTextures.set(index, tex);
      if (index === this.shownSection) this.showSectionTexture(tex);
    } catch {
      // section image unavailable; the grey box stays
    } finally {
      this.sectionLoading.delete(index);
    }
  }

  recolor(meshId: string): void {
    const attr = this.colorAttrs.get(meshId);
    if (attr) attr.needsUpdate = true;
  }

  setAnnotations(records: AnnotationRecord[]): void {
    this.annGroup.clear();
    for (const ann of records) {
      const color = new THREE.Color(ann.color[0] / 255, ann.color[1] / 255, ann.color[2] / 255);
      const sphere = new THREE.Mesh(
        new THREE.SphereGeometry(ann.radius_um, 24, 16),
        new THREE.MeshBasicMaterial({ color, transparent: true, opacity: 0.35, depthWrite: false }),
      );
      sphere.position.set(ann.position[0], ann.position[1], ann.position[2]);
      this.annGroup.add(sphere);
      if (ann.label) {
        const sprite = makeLabelSprite(ann.label);
        sprite.position.set(ann.position[0], ann.position[1] - ann.radius_um * 2.2, ann.position[2]);
        const s = ann.radius_um * 3;
        sprite.scale.set(s * 4, s, 1);
        this.annGroup.add(sprite);
      }
    }
    this.onDamage();
  }

  /** Highlighted pointer sphere shown while a tool hovers the surface. */
  setBeacon(point: [number, number, number] | null, radiusUm: number, rgb: [number, number, number]): void {
    if (!point) {
      this.beacon.visible = false;
      return;
    }
    this.beacon.visible = true;
    this.beacon.position.set(point[0], point[1], point[2]);
    const r = Math.max(radiusUm * 0.18, this.sceneDiag * 0.002);
    this.beacon.scale.setScalar(r);
    (this.beacon.material as THREE.MeshBasicMaterial).color.setRGB(
      rgb[0] / 255, rgb[1] / 255, rgb[2] / 255,
    );
  }

  /** Ray/mesh intersection under normalised device coordinates. */
  pick(ndcX: number, ndcY: number, state: ViewerState): PickHit | null {
    this.raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    this.raycaster.layers.set(MESH_LAYER);
    const targets = [...this.meshObjects.values()].filter((o) => o.visible);
    const hits = this.raycaster.intersectObjects(targets, false);
    const hit = hits.find((h) => h.face);
    if (!hit || !hit.face) return null;
    const obj = hit.object as THREE.Mesh;
    const pos = (obj.geometry as THREE.BufferGeometry).getAttribute("position");
    const corners = [hit.face.a, hit.face.b, hit.face.c];
    let best = corners[0];
    let bestD = Infinity;
    for (const c of corners) {
      const d = hit.point.distanceToSquared(
        new THREE.Vector3(pos.getX(c), pos.getY(c), pos.getZ(c)),
      );
      if (d < bestD) {
        bestD = d;
        best = c;
      }
    }
    return {
      meshId: obj.name,
      point: [hit.point.x, hit.point.y, hit.point.z],
      seed: [pos.getX(best), pos.getY(best), pos.getZ(best)],
      vertexIndex: best,
    };
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }

  /** PNG of the canvas at its native resolution. */
  screenshot(): Promise<Blob | null> {
    this.render();
    return new Promise((resolve) => this.canvas.toBlob(resolve, "image/png"));
  }
}

function makeLabelSprite(text: string): THREE.Sprite {
  const canvas = document.createElement("canvas");
  const ctx = canvas.getContext("2d")!;
  const font = "28px system-ui, sans-serif";
  ctx.font = font;
  const w = Math.ceil(ctx.measureText(text).width) + 20;
  canvas.width = w;
  canvas.height = 44;
  ctx.font = font;
  ctx.fillStyle = "rgba(20, 20, 26, 0.72)";
  ctx.fillRect(0, 0, w, 44);
  ctx.fillStyle = "#f5f5f0";
  ctx.textBaseline = "middle";
  ctx.fillText(text, 10, 23);
  const tex = new THREE.CanvasTexture(canvas);
  tex.colorSpace = THREE.SRGBColorSpace;
  const mat = new THREE.SpriteMaterial({ map: tex, depthTest: false });
  return new THREE.Sprite(mat);
}
