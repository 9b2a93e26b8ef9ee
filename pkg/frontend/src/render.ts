/**
 * 2D canvas renderer for composed scenes.
 *
 * Consumes the dict form of a composed scene (the same shape the
 * composition module serializes), so the main view and the nested
 * telepathy scene render through one code path.  All drawing goes
 * through a minimal structural context interface, which both the real
 * CanvasRenderingContext2D and the test suite's recording stub satisfy.
 */

import { JObject, JValue, num } from "./canonical.js";
import { OrbitCamera } from "./camera.js";
import { Pose, Vec3, applySketchTransform, localToWorld } from "./geometry.js";
import { PIE_SLOTS, PieSlot } from "./frames.js";
import { DEAD_ZONE_FRACTION, SLOT_LABELS, slotCenterAngle } from "./pie.js";

export type StyleValue = string | object;

/** The slice of the 2D canvas API the renderer uses. */
export interface Canvas2DLike {
  fillStyle: StyleValue;
  strokeStyle: StyleValue;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: string;
  save(): void;
  restore(): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  clip(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface PieOverlay {
  centerX: number;
  centerY: number;
  radius: number;
  hovered: PieSlot | null;
  /** Slot retained from the previous operation, shown emphasized. */
  retained: PieSlot | null;
}

export interface OpenStrokeView {
  board: string;
  points: Vec3[]; // board-local
  color: [number, number, number];
  width: number;
}

export interface RenderOptions {
  width: number;
  height: number;
  camera: OrbitCamera;
  /** Composed scene dict ({viewer, config, placements, boards, telepathy}). */
  scene: JObject;
  /** In-progress strokes to overlay (board-local points). */
  openStrokes?: OpenStrokeView[];
  pie?: PieOverlay | null;
  /** Full-width banner, e.g. while reconnecting. */
  banner?: string | null;
  /** Transient message (rejected inputs and the like). */
  toast?: string | null;
  /** Persistent status line (draw-token state, pending inputs). */
  statusLine?: string | null;
  grid?: boolean;
}

interface Viewport {
  x: number;
  y: number;
  w: number;
  h: number;
}

function cssColor(color: JValue, alpha = 1.0): string {
  const [r, g, b] = (color as JValue[]).map((c) => Math.round(num(c) * 255));
  return alpha >= 1.0 ? `rgb(${r},${g},${b})` : `rgba(${r},${g},${b},${alpha})`;
}

function project(
  camera: OrbitCamera, pose: Pose, p: Vec3, vp: Viewport,
): { x: number; y: number; depth: number } | null {
  const s = camera.worldToScreen(p, vp.w, vp.h, pose);
  if (s === null) return null;
  return { x: vp.x + s.x, y: vp.y + s.y, depth: s.depth };
}

/** Pixels per world unit at a given view depth. */
function focalScale(camera: OrbitCamera, vp: Viewport, depth: number): number {
  return (vp.h / 2.0) / (Math.tan(camera.fovY / 2.0) * depth);
}

function drawPolyline(
  ctx: Canvas2DLike,
  camera: OrbitCamera,
  pose: Pose,
  points: Vec3[],
  vp: Viewport,
  close = false,
): boolean {
  let any = false;
  let started = false;
  ctx.beginPath();
  for (const p of points) {
    const s = project(camera, pose, p, vp);
    if (s === null) {
      started = false; // break the line across the near plane
      continue;
    }
    if (started) {
      ctx.lineTo(s.x, s.y);
    } else {
      ctx.moveTo(s.x, s.y);
      started = true;
    }
    any = true;
  }
  if (!any) return false;
  if (close) ctx.closePath();
  ctx.stroke();
  return true;
}

function boardCorners(b: JObject): Vec3[] {
  const pose = Pose.fromDict(b["pose"] as JObject);
  const hw = num(b["w"]) / 2.0;
  const hh = num(b["h"]) / 2.0;
  return [
    new Vec3(-hw, -hh, 0),
    new Vec3(hw, -hh, 0),
    new Vec3(hw, hh, 0),
    new Vec3(-hw, hh, 0),
  ].map((p) => localToWorld(pose, p));
}

function sketchWorldPoints(sketch: JObject, boardPose: Pose, points: JValue[]): Vec3[] {
  const pivot = Vec3.fromList(sketch["pivot"]);
  const trans = Vec3.fromList(sketch["trans"]);
  const rot = num(sketch["rot"]);
  const scale = num(sketch["scale"]);
  return points.map((pt) => {
    const local = applySketchTransform(Vec3.fromList(pt), pivot, trans, rot, scale);
    return localToWorld(boardPose, local);
  });
}

function drawBoard(
  ctx: Canvas2DLike, camera: OrbitCamera, viewPose: Pose, b: JObject, vp: Viewport,
): void {
  const corners = boardCorners(b);
  const projected = corners.map((c) => project(camera, viewPose, c, vp));
  if (projected.every((p) => p !== null)) {
    ctx.strokeStyle = b["kind"] === "horizontal" ? "#7a6a3a" : "#445066";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(projected[0]!.x, projected[0]!.y);
    for (let i = 1; i < 4; i++) {
      ctx.lineTo(projected[i]!.x, projected[i]!.y);
    }
    ctx.closePath();
    ctx.stroke();
    // Board id near the top-left corner.
    ctx.fillStyle = "#8a93a6";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "left";
    const label = b["source"] ? `${b["id"]} ⇐ ${b["source"]}` : String(b["id"]);
    ctx.fillText(label, projected[3]!.x + 4, projected[3]!.y - 4);
  }

  const boardPose = Pose.fromDict(b["pose"] as JObject);
  for (const sk of b["sketches"] as JValue[]) {
    drawSketch(ctx, camera, viewPose, sk as JObject, boardPose, vp);
  }
}

function drawSketch(
  ctx: Canvas2DLike,
  camera: OrbitCamera,
  viewPose: Pose,
  sketch: JObject,
  boardPose: Pose,
  vp: Viewport,
): void {
  for (const st of sketch["strokes"] as JValue[]) {
    const stroke = st as JObject;
    const world = sketchWorldPoints(sketch, boardPose, stroke["points"] as JValue[]);
    if (world.length === 0) continue;
    const first = project(camera, viewPose, world[0], vp);
    const depth = first ? first.depth : camera.dist;
    ctx.strokeStyle = cssColor(stroke["color"]);
    ctx.lineWidth = Math.min(
      8.0, Math.max(1.0, num(stroke["width"]) * focalScale(camera, vp, depth)));
    if (world.length === 1) {
      // A dot: a stroke with a single point still deserves ink.
      if (first) {
        ctx.fillStyle = cssColor(stroke["color"]);
        ctx.beginPath();
        ctx.arc(first.x, first.y, Math.max(1.0, ctx.lineWidth), 0, 2 * Math.PI);
        ctx.fill();
      }
      continue;
    }
    drawPolyline(ctx, camera, viewPose, world, vp);
  }

  for (const pr of sketch["prims"] as JValue[]) {
    const prim = pr as JObject;
    drawPrimitive(ctx, camera, viewPose, sketch, prim, boardPose, vp);
  }
}

function drawPrimitive(
  ctx: Canvas2DLike,
  camera: OrbitCamera,
  viewPose: Pose,
  sketch: JObject,
  prim: JObject,
  boardPose: Pose,
  vp: Viewport,
): void {
  const shape = prim["shape"] as string;
  const center = Vec3.fromList(prim["center"]);
  const size = Vec3.fromList(prim["size"]);
  const scale = num(sketch["scale"]);
  ctx.strokeStyle = cssColor(prim["color"]);
  ctx.lineWidth = 1.5;
  if (shape === "cube") {
    const hx = size.x / 2.0;
    const hy = size.y / 2.0;
    const hz = size.z / 2.0;
    const corners: Vec3[] = [];
    for (const dx of [-hx, hx]) {
      for (const dy of [-hy, hy]) {
        for (const dz of [-hz, hz]) {
          corners.push(new Vec3(center.x + dx, center.y + dy, center.z + dz));
        }
      }
    }
    const world = sketchWorldPoints(
      sketch, boardPose, corners.map((c) => c.toList()));
    // Corner order is (dx, dy, dz) nested loops; 12 cube edges.
    const edges: Array<[number, number]> = [
      [0, 1], [2, 3], [4, 5], [6, 7], // z-aligned
      [0, 2], [1, 3], [4, 6], [5, 7], // y-aligned
      [0, 4], [1, 5], [2, 6], [3, 7], // x-aligned
    ];
    for (const [a, b] of edges) {
      drawPolyline(ctx, camera, viewPose, [world[a], world[b]], vp);
    }
  } else {
    // Sphere or cylinder: circle of the transformed radius at the center.
    const world = sketchWorldPoints(sketch, boardPose, [center.toList()]);
    const s = project(camera, viewPose, world[0], vp);
    if (s === null) return;
    const r = (size.x / 2.0) * scale * focalScale(camera, vp, s.depth);
    ctx.beginPath();
    ctx.arc(s.x, s.y, Math.max(1.0, r), 0, 2 * Math.PI);
    ctx.stroke();
    if (shape === "cylinder") {
      const hh = (size.y / 2.0) * scale * focalScale(camera, vp, s.depth);
      ctx.beginPath();
      ctx.moveTo(s.x, s.y - hh);
      ctx.lineTo(s.x, s.y + hh);
      ctx.stroke();
    }
  }
}

function drawAvatar(
  ctx: Canvas2DLike, camera: OrbitCamera, viewPose: Pose, placement: JObject, vp: Viewport,
): void {
  const head = Pose.fromDict(placement["head"] as JObject);
  const mirrored = placement["mirrored"] === true;
  const s = project(camera, viewPose, head.position, vp);
  if (s === null) return;
  const radius = Math.min(40.0, Math.max(
    3.0, 0.12 * focalScale(camera, vp, s.depth)));
  ctx.save();
  if (mirrored) ctx.globalAlpha = 0.65;
  const color = mirrored ? "#b06ad0" : "#5aa0e0";
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 2.0;
  ctx.beginPath();
  ctx.arc(s.x, s.y, radius, 0, 2 * Math.PI);
  ctx.stroke();
  // Gaze tick: a short line along the head's forward direction.
  const tip = project(
    camera, viewPose, head.position.add(head.frame.forward.scaled(0.25)), vp);
  if (tip !== null) {
    ctx.beginPath();
    ctx.moveTo(s.x, s.y);
    ctx.lineTo(tip.x, tip.y);
    ctx.stroke();
  }
  for (const handKey of ["left", "right"]) {
    const hand = Pose.fromDict(placement[handKey] as JObject);
    const hs = project(camera, viewPose, hand.position, vp);
    if (hs !== null) {
      ctx.beginPath();
      ctx.arc(hs.x, hs.y, Math.max(1.5, radius * 0.2), 0, 2 * Math.PI);
      ctx.fill();
    }
  }
  ctx.font = "12px sans-serif";
  ctx.textAlign = "center";
  const name = String(placement["name"] ?? placement["id"]);
  ctx.fillText(mirrored ? `${name} (mirrored)` : name, s.x, s.y - radius - 6);
  ctx.restore();
}

function drawGrid(
  ctx: Canvas2DLike, camera: OrbitCamera, viewPose: Pose, vp: Viewport,
): void {
  ctx.strokeStyle = "#20242c";
  ctx.lineWidth = 1.0;
  for (let i = -4; i <= 4; i++) {
    drawPolyline(ctx, camera, viewPose,
      [new Vec3(i, 0, -4), new Vec3(i, 0, 4)], vp);
    drawPolyline(ctx, camera, viewPose,
      [new Vec3(-4, 0, i), new Vec3(4, 0, i)], vp);
  }
}

/** Draw one composed scene dict into a viewport with a given view pose. */
function drawSceneDict(
  ctx: Canvas2DLike,
  camera: OrbitCamera,
  viewPose: Pose,
  scene: JObject,
  vp: Viewport,
  grid: boolean,
): void {
  if (grid) drawGrid(ctx, camera, viewPose, vp);
  for (const b of scene["boards"] as JValue[]) {
    drawBoard(ctx, camera, viewPose, b as JObject, vp);
  }
  for (const p of scene["placements"] as JValue[]) {
    drawAvatar(ctx, camera, viewPose, p as JObject, vp);
  }
}

function drawPieMenu(ctx: Canvas2DLike, pie: PieOverlay): void {
  const { centerX: cx, centerY: cy, radius } = pie;
  ctx.save();
  ctx.globalAlpha = 0.92;
  for (let i = 0; i < PIE_SLOTS.length; i++) {
    const slot = PIE_SLOTS[i];
    // Canvas arcs run clockwise in screen space; negate the math angles.
    const a0 = -(slotCenterAngle(i) - Math.PI / 6.0);
    const a1 = -(slotCenterAngle(i) + Math.PI / 6.0);
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.arc(cx, cy, radius, a1, a0);
    ctx.closePath();
    ctx.fillStyle =
      slot === pie.hovered ? "#3c5a8c"
        : slot === pie.retained ? "#32404f"
          : "#262c36";
    ctx.fill();
    ctx.strokeStyle = "#0f1217";
    ctx.lineWidth = 1.0;
    ctx.stroke();
    const mid = slotCenterAngle(i);
    const lx = cx + Math.cos(mid) * radius * 0.68;
    const ly = cy - Math.sin(mid) * radius * 0.68;
    ctx.fillStyle = slot === pie.hovered ? "#ffffff" : "#c8d0dc";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(SLOT_LABELS[slot], lx, ly + 4);
  }
  // Dead zone.
  ctx.beginPath();
  ctx.arc(cx, cy, radius * DEAD_ZONE_FRACTION, 0, 2 * Math.PI);
  ctx.fillStyle = "#11141a";
  ctx.fill();
  ctx.restore();
}

/** Render a full frame: scene, telepathy, and UI chrome. */
export function renderFrame(ctx: Canvas2DLike, opts: RenderOptions): void {
  const { width, height, camera, scene } = opts;
  const vp: Viewport = { x: 0, y: 0, w: width, h: height };
  ctx.fillStyle = "#14171c";
  ctx.fillRect(0, 0, width, height);

  const telepathy = scene["telepathy"] as JObject | null;
  const mode = telepathy ? (telepathy["mode"] as string) : null;

  if (telepathy && (mode === "immersive_first" || mode === "immersive_third")) {
    // Immersive telepathy: the observee's composed scene replaces the
    // viewer's, seen from the telepathy camera.
    const pose = Pose.fromDict(telepathy["camera"] as JObject);
    drawSceneDict(
      ctx, camera, pose, telepathy["scene"] as JObject, vp, opts.grid ?? false);
    ctx.fillStyle = "#9fb4d8";
    ctx.font = "13px sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(`seeing through ${telepathy["observee"]} (${mode})`, 10, 20);
  } else {
    const viewPose = camera.headPose();
    drawSceneDict(ctx, camera, viewPose, scene, vp, opts.grid ?? false);
    for (const os of opts.openStrokes ?? []) {
      drawOpenStroke(ctx, camera, viewPose, scene, os, vp);
    }
    if (telepathy && mode === "windowed") {
      drawTelepathyWindow(ctx, camera, telepathy, vp);
    }
  }

  if (opts.pie) {
    drawPieMenu(ctx, opts.pie);
  }
  if (opts.statusLine) {
    ctx.fillStyle = "#aab6c8";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(opts.statusLine, 10, height - 10);
  }
  if (opts.toast) {
    ctx.save();
    ctx.globalAlpha = 0.9;
    ctx.fillStyle = "#5c2b2b";
    const tw = Math.min(width - 40, 420);
    ctx.fillRect((width - tw) / 2, height - 64, tw, 28);
    ctx.fillStyle = "#ffd9d9";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(opts.toast, width / 2, height - 46);
    ctx.restore();
  }
  if (opts.banner) {
    ctx.save();
    ctx.globalAlpha = 0.85;
    ctx.fillStyle = "#332414";
    ctx.fillRect(0, 0, width, 34);
    ctx.fillStyle = "#ffcf8a";
    ctx.font = "13px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(opts.banner, width / 2, 22);
    ctx.restore();
  }
}

/** In-progress stroke overlay: points are board-local on a live board. */
function drawOpenStroke(
  ctx: Canvas2DLike,
  camera: OrbitCamera,
  viewPose: Pose,
  scene: JObject,
  os: OpenStrokeView,
  vp: Viewport,
): void {
  const board = (scene["boards"] as JValue[])
    .map((b) => b as JObject)
    .find((b) => b["id"] === os.board);
  if (board === undefined) return;
  const pose = Pose.fromDict(board["pose"] as JObject);
  const world = os.points.map((p) => localToWorld(pose, p));
  if (world.length === 0) return;
  ctx.strokeStyle = cssColor([...os.color], 0.9);
  const first = project(camera, viewPose, world[0], vp);
  const depth = first ? first.depth : camera.dist;
  ctx.lineWidth = Math.min(
    8.0, Math.max(1.0, os.width * focalScale(camera, vp, depth)));
  if (world.length === 1 && first) {
    ctx.fillStyle = cssColor([...os.color], 0.9);
    ctx.beginPath();
    ctx.arc(first.x, first.y, Math.max(1.0, ctx.lineWidth), 0, 2 * Math.PI);
    ctx.fill();
    return;
  }
  drawPolyline(ctx, camera, viewPose, world, vp);
}

/** Picture-in-picture overlay for windowed telepathy: the observee's
 * scene rendered from their camera into a corner inset. */
function drawTelepathyWindow(
  ctx: Canvas2DLike, camera: OrbitCamera, telepathy: JObject, outer: Viewport,
): void {
  const w = Math.round(outer.w * 0.3);
  const h = Math.round((w * 9) / 16);
  const vp: Viewport = { x: outer.w - w - 12, y: 12, w, h };
  ctx.save();
  ctx.beginPath();
  ctx.rect(vp.x, vp.y, vp.w, vp.h);
  ctx.clip();
  ctx.fillStyle = "#0d1014";
  ctx.fillRect(vp.x, vp.y, vp.w, vp.h);
  const pose = Pose.fromDict(telepathy["camera"] as JObject);
  drawSceneDict(ctx, camera, pose, telepathy["scene"] as JObject, vp, false);
  ctx.restore();
  ctx.strokeStyle = "#88a0c8";
  ctx.lineWidth = 1.5;
  ctx.strokeRect(vp.x, vp.y, vp.w, vp.h);
  ctx.fillStyle = "#9fb4d8";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(`viewing ${telepathy["observee"]}`, vp.x + 6, vp.y + h + 14);
}
