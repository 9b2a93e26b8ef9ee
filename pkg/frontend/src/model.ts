/**
 * Session data model and event reducer — the replica side.
 *
 * State changes happen exclusively through {@link applyEvent}, the same
 * deterministic reducer the relay runs over its sequenced event list.
 * A replica that applies the relay's broadcasts in order converges to
 * the relay's state bit-for-bit, verified by comparing sha256 hashes of
 * the canonical JSON serialization.
 *
 * Sketch content is stored in the local frame of its owning (vertical)
 * board, under a per-sketch transform: translation, yaw about the
 * board-local +y axis through a fixed pivot, uniform scale.
 */

import {
  JObject,
  JValue,
  compareCodePoints,
  digest,
  num,
  real,
} from "./canonical.js";
import {
  Frame,
  GeometryError,
  Plane,
  Pose,
  Ray,
  Vec3,
  X_AXIS,
  Y_AXIS,
  Z_AXIS,
  ZERO,
  applySketchTransform,
  invertSketchTransform,
  localToWorld,
  lookFrame,
  rayAabbIntersect,
  rayPlaneIntersect,
  worldToLocal,
  worldToLocalDir,
} from "./geometry.js";
import { Message } from "./frames.js";

// Selection: world-space sketch AABBs are inflated by this before ray tests.
export const PICK_INFLATE = 0.01;
// Stroke grouping: a stroke ended within this time and distance of an
// existing sketch merges into it instead of starting a new sketch.
export const MERGE_WINDOW_S = 1.0;
export const MERGE_DIST = 0.1;
// Gesture scale factors are clamped to this range.
export const SCALE_CLAMP: [number, number] = [0.01, 100.0];
// A gaze candidate must win this many consecutive evaluations to take over.
export const GAZE_STICKY_EVALS = 10;

export const EVENT_KINDS = [
  "hello", "goodbye", "avatar_update",
  "stroke_begin", "stroke_points", "stroke_end",
  "sketch_op", "draw_request", "draw_grant", "draw_release",
  "config_switch", "telepathy_set",
] as const;

export type EventKind = (typeof EVENT_KINDS)[number];

export function isEventKind(kind: string): kind is EventKind {
  return (EVENT_KINDS as readonly string[]).includes(kind);
}

/** An event that is invalid against the current state (relay: Nack). */
export class Rejection extends Error {
  constructor(readonly code: string, readonly detail = "") {
    super(detail ? `${code}: ${detail}` : code);
  }
}

type Rgb = [number, number, number];

function parseColor(v: JValue): Rgb {
  const arr = v as JValue[];
  return [num(arr[0]), num(arr[1]), num(arr[2])];
}

function asInt(v: JValue): number {
  return Math.trunc(num(v));
}

function sortedKeys<T>(map: Map<string, T>): string[] {
  return [...map.keys()].sort(compareCodePoints);
}

// ---------------------------------------------------------------------------
// Content types
// ---------------------------------------------------------------------------

export class Stroke {
  constructor(
    public id: string,
    public points: Vec3[],
    public color: Rgb,
    public width: number,
  ) {}

  toDict(): JObject {
    return {
      id: this.id,
      points: this.points.map((p) => p.toList()),
      color: this.color.map((c) => real(c)),
      width: real(this.width),
    };
  }

  static fromDict(d: JObject): Stroke {
    return new Stroke(
      d["id"] as string,
      (d["points"] as JValue[]).map((p) => Vec3.fromList(p)),
      parseColor(d["color"]),
      num(d["width"]),
    );
  }
}

export class Primitive {
  constructor(
    public shape: string, // cube | sphere | cylinder
    public center: Vec3,
    public size: Vec3, // full extents; sphere uses size.x as diameter
    public color: Rgb,
  ) {}

  /** Content-space points whose transformed hull bounds the shape
   * (exact for cubes; spheres/cylinders get analytic extents). */
  cornerPoints(): Vec3[] {
    const c = this.center;
    const hx = this.size.x / 2.0;
    const hy = this.size.y / 2.0;
    const hz = this.size.z / 2.0;
    const out: Vec3[] = [];
    for (const dx of [-hx, hx]) {
      for (const dy of [-hy, hy]) {
        for (const dz of [-hz, hz]) {
          out.push(new Vec3(c.x + dx, c.y + dy, c.z + dz));
        }
      }
    }
    return out;
  }

  toDict(): JObject {
    return {
      shape: this.shape,
      center: this.center.toList(),
      size: this.size.toList(),
      color: this.color.map((c) => real(c)),
    };
  }

  static fromDict(d: JObject): Primitive {
    return new Primitive(
      d["shape"] as string,
      Vec3.fromList(d["center"]),
      Vec3.fromList(d["size"]),
      parseColor(d["color"]),
    );
  }
}

/**
 * A manipulable group of strokes and primitives.
 *
 * translation/rotation/scale map content space to board-local space:
 * q = pivot + translation + Ry(rotation) * (scale * (p - pivot)).
 * The pivot is frozen at creation so later merges do not shift placement.
 */
export class Sketch3D {
  constructor(
    public id: string,
    public boardId: string,
    public strokes: Stroke[] = [],
    public primitives: Primitive[] = [],
    public translation: Vec3 = ZERO,
    public rotation = 0.0,
    public scale = 1.0,
    public pivot: Vec3 = ZERO,
    public lastTick = 0,
  ) {}

  isEmpty(): boolean {
    return this.strokes.length === 0 && this.primitives.length === 0;
  }

  transformPoint(p: Vec3): Vec3 {
    return applySketchTransform(p, this.pivot, this.translation, this.rotation, this.scale);
  }

  untransformPoint(q: Vec3): Vec3 {
    return invertSketchTransform(q, this.pivot, this.translation, this.rotation, this.scale);
  }

  private transformedHullPoints(): Vec3[] {
    const out: Vec3[] = [];
    for (const stroke of this.strokes) {
      for (const p of stroke.points) {
        out.push(this.transformPoint(p));
      }
    }
    for (const prim of this.primitives) {
      if (prim.shape === "cube") {
        for (const p of prim.cornerPoints()) {
          out.push(this.transformPoint(p));
        }
      }
    }
    return out;
  }

  /** (prim, transformed center, scaled radius, scaled half-height) for
   * the rotation-invariant shapes. */
  private roundPrims(): Array<[Primitive, Vec3, number, number]> {
    const out: Array<[Primitive, Vec3, number, number]> = [];
    for (const prim of this.primitives) {
      if (prim.shape === "sphere" || prim.shape === "cylinder") {
        const cT = this.transformPoint(prim.center);
        const rT = (prim.size.x / 2.0) * this.scale;
        const hhT = (prim.size.y / 2.0) * this.scale;
        out.push([prim, cT, rT, hhT]);
      }
    }
    return out;
  }

  /** Board-local AABB of the transformed content. */
  localBbox(): [Vec3, Vec3] {
    if (this.isEmpty()) {
      throw new Rejection("empty_sketch", `sketch ${this.id} has no content`);
    }
    const lo = [Infinity, Infinity, Infinity];
    const hi = [-Infinity, -Infinity, -Infinity];
    for (const q of this.transformedHullPoints()) {
      const qc = q.components();
      for (let i = 0; i < 3; i++) {
        if (qc[i] < lo[i]) lo[i] = qc[i];
        if (qc[i] > hi[i]) hi[i] = qc[i];
      }
    }
    for (const [prim, cT, rT, hhT] of this.roundPrims()) {
      const ext = [rT, prim.shape === "cylinder" ? hhT : rT, rT];
      const cc = cT.components();
      for (let i = 0; i < 3; i++) {
        if (cc[i] - ext[i] < lo[i]) lo[i] = cc[i] - ext[i];
        if (cc[i] + ext[i] > hi[i]) hi[i] = cc[i] + ext[i];
      }
    }
    return [new Vec3(lo[0], lo[1], lo[2]), new Vec3(hi[0], hi[1], hi[2])];
  }

  /** World-space AABB: exact min/max over all transformed content. */
  worldBbox(boardPose: Pose): [Vec3, Vec3] {
    if (this.isEmpty()) {
      throw new Rejection("empty_sketch", `sketch ${this.id} has no content`);
    }
    const lo = [Infinity, Infinity, Infinity];
    const hi = [-Infinity, -Infinity, -Infinity];
    for (const q of this.transformedHullPoints()) {
      const w = localToWorld(boardPose, q).components();
      for (let i = 0; i < 3; i++) {
        if (w[i] < lo[i]) lo[i] = w[i];
        if (w[i] > hi[i]) hi[i] = w[i];
      }
    }
    for (const [prim, cT, rT, hhT] of this.roundPrims()) {
      const cw = localToWorld(boardPose, cT).components();
      let ext: number[];
      if (prim.shape === "sphere") {
        ext = [rT, rT, rT];
      } else {
        // Cylinder axis is board-local +y; exact AABB of a tilted cylinder.
        const a = boardPose.frame.up.components();
        ext = a.map(
          (ai) => hhT * Math.abs(ai) + rT * Math.sqrt(Math.max(0.0, 1.0 - ai * ai)));
      }
      for (let i = 0; i < 3; i++) {
        if (cw[i] - ext[i] < lo[i]) lo[i] = cw[i] - ext[i];
        if (cw[i] + ext[i] > hi[i]) hi[i] = cw[i] + ext[i];
      }
    }
    return [new Vec3(lo[0], lo[1], lo[2]), new Vec3(hi[0], hi[1], hi[2])];
  }

  deepCopy(newId: string): Sketch3D {
    return new Sketch3D(
      newId,
      this.boardId,
      this.strokes.map(
        (s, i) => new Stroke(`${newId}_s${i}`, [...s.points], s.color, s.width)),
      this.primitives.map(
        (p) => new Primitive(p.shape, p.center, p.size, p.color)),
      this.translation,
      this.rotation,
      this.scale,
      this.pivot,
      this.lastTick,
    );
  }

  toDict(): JObject {
    return {
      id: this.id,
      board: this.boardId,
      strokes: this.strokes.map((s) => s.toDict()),
      prims: this.primitives.map((p) => p.toDict()),
      trans: this.translation.toList(),
      rot: real(this.rotation),
      scale: real(this.scale),
      pivot: this.pivot.toList(),
      last_tick: this.lastTick,
    };
  }

  static fromDict(d: JObject): Sketch3D {
    return new Sketch3D(
      d["id"] as string,
      d["board"] as string,
      (d["strokes"] as JValue[]).map((s) => Stroke.fromDict(s as JObject)),
      (d["prims"] as JValue[]).map((p) => Primitive.fromDict(p as JObject)),
      Vec3.fromList(d["trans"]),
      num(d["rot"]),
      num(d["scale"]),
      Vec3.fromList(d["pivot"]),
      asInt(d["last_tick"]),
    );
  }
}

/**
 * A planar content surface.  Local frame: right = +x (u), up = +y (v),
 * outward normal = +z.  Vertical boards are shared; horizontal boards
 * are private per-owner drawing surfaces for the eyes-free configuration.
 */
export class Board {
  constructor(
    public id: string,
    public pose: Pose,
    public width: number,
    public height: number,
    public kind: string = "vertical", // vertical | horizontal
    public owner: string | null = null,
    public sketches: Sketch3D[] = [],
  ) {}

  plane(): Plane {
    return new Plane(this.pose.position, this.pose.frame.forward);
  }

  center(): Vec3 {
    return this.pose.position;
  }

  containsLocal(p: Vec3): boolean {
    return Math.abs(p.x) <= this.width / 2.0 && Math.abs(p.y) <= this.height / 2.0;
  }

  sketch(sketchId: string): Sketch3D | null {
    for (const s of this.sketches) {
      if (s.id === sketchId) return s;
    }
    return null;
  }

  toDict(): JObject {
    return {
      id: this.id,
      pose: this.pose.toDict(),
      w: real(this.width),
      h: real(this.height),
      kind: this.kind,
      owner: this.owner,
      sketches: this.sketches.map((s) => s.toDict()),
    };
  }

  static fromDict(d: JObject): Board {
    return new Board(
      d["id"] as string,
      Pose.fromDict(d["pose"] as JObject),
      num(d["w"]),
      num(d["h"]),
      d["kind"] as string,
      d["owner"] as string | null,
      (d["sketches"] as JValue[]).map((s) => Sketch3D.fromDict(s as JObject)),
    );
  }
}

export class Avatar {
  constructor(
    public id: string,
    public name: string,
    public head: Pose,
    public leftHand: Pose,
    public rightHand: Pose,
    // Gaze-board tracking with hysteresis, updated on every avatar_update.
    public gazeBoard: string | null = null,
    public gazeCand: string | null = null,
    public gazeCount = 0,
  ) {}

  toDict(): JObject {
    return {
      id: this.id,
      name: this.name,
      head: this.head.toDict(),
      left: this.leftHand.toDict(),
      right: this.rightHand.toDict(),
      gaze: this.gazeBoard,
      gaze_cand: this.gazeCand,
      gaze_n: this.gazeCount,
    };
  }

  static fromDict(d: JObject): Avatar {
    return new Avatar(
      d["id"] as string,
      d["name"] as string,
      Pose.fromDict(d["head"] as JObject),
      Pose.fromDict(d["left"] as JObject),
      Pose.fromDict(d["right"] as JObject),
      d["gaze"] as string | null,
      d["gaze_cand"] as string | null,
      asInt(d["gaze_n"]),
    );
  }
}

export class DrawToken {
  constructor(public holder: string | null = null, public queue: string[] = []) {}

  toDict(): JObject {
    return { holder: this.holder, queue: [...this.queue] };
  }

  static fromDict(d: JObject): DrawToken {
    return new DrawToken(d["holder"] as string | null, [...(d["queue"] as string[])]);
  }
}

export class OpenStroke {
  constructor(
    public id: string,
    public boardId: string,
    public author: string,
    public color: Rgb,
    public width: number,
    public points: Vec3[] = [],
  ) {}

  toDict(): JObject {
    return {
      id: this.id,
      board: this.boardId,
      author: this.author,
      color: this.color.map((c) => real(c)),
      width: real(this.width),
      points: this.points.map((p) => p.toList()),
    };
  }

  static fromDict(d: JObject): OpenStroke {
    return new OpenStroke(
      d["id"] as string,
      d["board"] as string,
      d["author"] as string,
      parseColor(d["color"]),
      num(d["width"]),
      (d["points"] as JValue[]).map((p) => Vec3.fromList(p)),
    );
  }
}

/**
 * Pie-menu state for one avatar: idle, selected (menu open), or an
 * operation in flight.  Gesture anchors are stored in board-local
 * coordinates of the sketch's board.
 */
export class Selection {
  constructor(
    public mode: string = "idle", // idle | selected | op
    public sketchId: string | null = null,
    public op: string | null = null,
    public hand0: Vec3 | null = null,   // anchor hand position
    public center0: Vec3 | null = null, // sketch world-bbox center at anchor, board-local
    public axis0: Vec3 | null = null,   // viewer forward at anchor, board-local
    public dist0 = 0.0,                 // anchor hand distance from center
    public phiLast = 0.0,               // last hand yaw angle, for sweep tracking
    public pendTrans: Vec3 = ZERO,
    public pendRot = 0.0,
    public pendScale = 1.0,
  ) {}

  toDict(): JObject {
    const d: JObject = { mode: this.mode };
    if (this.mode !== "idle") {
      d["sketch"] = this.sketchId;
    }
    if (this.mode === "op") {
      d["op"] = this.op;
      d["hand0"] = this.hand0!.toList();
      d["center0"] = this.center0!.toList();
      d["axis0"] = this.axis0!.toList();
      d["dist0"] = real(this.dist0);
      d["phi_last"] = real(this.phiLast);
      d["pend_trans"] = this.pendTrans.toList();
      d["pend_rot"] = real(this.pendRot);
      d["pend_scale"] = real(this.pendScale);
    }
    return d;
  }

  static fromDict(d: JObject): Selection {
    const sel = new Selection(d["mode"] as string, (d["sketch"] ?? null) as string | null);
    if (sel.mode === "op") {
      sel.op = d["op"] as string;
      sel.hand0 = Vec3.fromList(d["hand0"]);
      sel.center0 = Vec3.fromList(d["center0"]);
      sel.axis0 = Vec3.fromList(d["axis0"]);
      sel.dist0 = num(d["dist0"]);
      sel.phiLast = num(d["phi_last"]);
      sel.pendTrans = Vec3.fromList(d["pend_trans"]);
      sel.pendRot = num(d["pend_rot"]);
      sel.pendScale = num(d["pend_scale"]);
    }
    return sel;
  }
}

// ---------------------------------------------------------------------------
// Session state
// ---------------------------------------------------------------------------

export interface TelepathyLink {
  observee: string;
  mode: string;
}

export class SessionState {
  seq = 0;
  tickHz = 20;
  config = "side_by_side";
  avatars = new Map<string, Avatar>();
  boards: Board[] = [];
  locks = new Map<string, DrawToken>();
  telepathy = new Map<string, TelepathyLink>(); // observer -> {observee, mode}
  selections = new Map<string, Selection>();
  openStrokes = new Map<string, OpenStroke>();
  joinCount = 0;

  // -- lookups --------------------------------------------------------------

  board(boardId: string): Board | null {
    for (const b of this.boards) {
      if (b.id === boardId) return b;
    }
    return null;
  }

  verticalBoards(): Board[] {
    return this.boards.filter((b) => b.kind === "vertical");
  }

  findSketch(sketchId: string): [Board, Sketch3D] | null {
    for (const b of this.boards) {
      const s = b.sketch(sketchId);
      if (s !== null) return [b, s];
    }
    return null;
  }

  openStrokeFor(author: string, boardId: string): OpenStroke | null {
    for (const os of this.openStrokes.values()) {
      if (os.author === author && os.boardId === boardId) return os;
    }
    return null;
  }

  selection(avatarId: string): Selection {
    return this.selections.get(avatarId) ?? new Selection();
  }

  // -- serialization ----------------------------------------------------------

  toDict(): JObject {
    const avatars: JObject = {};
    for (const k of sortedKeys(this.avatars)) {
      avatars[k] = this.avatars.get(k)!.toDict();
    }
    const locks: JObject = {};
    for (const k of sortedKeys(this.locks)) {
      locks[k] = this.locks.get(k)!.toDict();
    }
    const telepathy: JObject = {};
    for (const k of sortedKeys(this.telepathy)) {
      const link = this.telepathy.get(k)!;
      telepathy[k] = { observee: link.observee, mode: link.mode };
    }
    const selections: JObject = {};
    for (const k of sortedKeys(this.selections)) {
      selections[k] = this.selections.get(k)!.toDict();
    }
    const strokesOpen: JObject = {};
    for (const k of sortedKeys(this.openStrokes)) {
      strokesOpen[k] = this.openStrokes.get(k)!.toDict();
    }
    return {
      seq: this.seq,
      tick_hz: this.tickHz,
      config: this.config,
      avatars,
      boards: this.boards.map((b) => b.toDict()),
      locks,
      telepathy,
      selections,
      strokes_open: strokesOpen,
      join_count: this.joinCount,
    };
  }

  static fromDict(d: JObject): SessionState {
    const state = new SessionState();
    state.seq = asInt(d["seq"]);
    state.tickHz = asInt(d["tick_hz"]);
    state.config = d["config"] as string;
    const avatars = d["avatars"] as JObject;
    for (const k of Object.keys(avatars).sort(compareCodePoints)) {
      state.avatars.set(k, Avatar.fromDict(avatars[k] as JObject));
    }
    state.boards = (d["boards"] as JValue[]).map((b) => Board.fromDict(b as JObject));
    const locks = d["locks"] as JObject;
    for (const k of Object.keys(locks).sort(compareCodePoints)) {
      state.locks.set(k, DrawToken.fromDict(locks[k] as JObject));
    }
    const telepathy = d["telepathy"] as JObject;
    for (const k of Object.keys(telepathy).sort(compareCodePoints)) {
      const link = telepathy[k] as JObject;
      state.telepathy.set(k, {
        observee: link["observee"] as string,
        mode: link["mode"] as string,
      });
    }
    const selections = d["selections"] as JObject;
    for (const k of Object.keys(selections).sort(compareCodePoints)) {
      state.selections.set(k, Selection.fromDict(selections[k] as JObject));
    }
    const strokesOpen = d["strokes_open"] as JObject;
    for (const k of Object.keys(strokesOpen).sort(compareCodePoints)) {
      state.openStrokes.set(k, OpenStroke.fromDict(strokesOpen[k] as JObject));
    }
    state.joinCount = asInt(d["join_count"]);
    return state;
  }

  clone(): SessionState {
    return SessionState.fromDict(this.toDict());
  }

  contentHash(): string {
    return digest(this.toDict());
  }
}

/** Fresh session with `nBoards` vertical boards placed on the walls of a
 * square room, all facing the center. */
export function newSession(
  nBoards = 1, config = "side_by_side", tickHz = 20,
): SessionState {
  if (nBoards < 1) throw new Error("need at least one board");
  const state = new SessionState();
  state.config = config;
  state.tickHz = tickHz;
  for (let i = 0; i < nBoards; i++) {
    const yaw = (i % 4) * (Math.PI / 2.0);
    const ring = 2.0 + 1.0 * Math.floor(i / 4);
    const sinY = Math.sin(yaw);
    const cosY = Math.cos(yaw);
    const center = new Vec3(ring * sinY, 1.5, ring * cosY);
    const fwd = new Vec3(-sinY, 0.0, -cosY);
    const board = new Board(`b${i}`, new Pose(center, lookFrame(fwd)), 2.0, 1.5);
    state.boards.push(board);
    state.locks.set(board.id, new DrawToken());
  }
  return state;
}

// ---------------------------------------------------------------------------
// Gaze classification
// ---------------------------------------------------------------------------

/** The vertical board the head-forward ray hits (smallest t wins);
 * otherwise the board whose center subtends the smallest angle. */
export function classifyGaze(head: Pose, boards: Board[]): string | null {
  const verticals = boards.filter((b) => b.kind === "vertical");
  if (verticals.length === 0) return null;
  const ray = new Ray(head.position, head.frame.forward);
  let bestId: string | null = null;
  let bestT = Infinity;
  for (const b of verticals) {
    const hit = rayPlaneIntersect(ray, b.plane());
    if (hit === null) continue;
    if (b.containsLocal(worldToLocal(b.pose, hit.point)) && hit.t < bestT) {
      bestT = hit.t;
      bestId = b.id;
    }
  }
  if (bestId !== null) return bestId;
  // Fallback: smallest angle between gaze and direction to board center.
  let bestCos = -Infinity;
  for (const b of verticals) {
    const toBoard = b.center().sub(head.position);
    const n = toBoard.norm();
    if (n <= 1e-9) return b.id;
    const cosA = ray.direction.dot(toBoard) / n;
    if (cosA > bestCos) {
      bestCos = cosA;
      bestId = b.id;
    }
  }
  return bestId;
}

/** One gaze evaluation with hysteresis: a new board must win
 * GAZE_STICKY_EVALS consecutive evaluations before it takes over. */
export function updateGaze(avatar: Avatar, boards: Board[]): void {
  const current = classifyGaze(avatar.head, boards);
  if (current === null || current === avatar.gazeBoard) {
    avatar.gazeCand = null;
    avatar.gazeCount = 0;
    return;
  }
  if (avatar.gazeBoard === null) {
    avatar.gazeBoard = current;
    avatar.gazeCand = null;
    avatar.gazeCount = 0;
    return;
  }
  if (current === avatar.gazeCand) {
    avatar.gazeCount += 1;
  } else {
    avatar.gazeCand = current;
    avatar.gazeCount = 1;
  }
  if (avatar.gazeCount >= GAZE_STICKY_EVALS) {
    avatar.gazeBoard = current;
    avatar.gazeCand = null;
    avatar.gazeCount = 0;
  }
}

// ---------------------------------------------------------------------------
// Spawn layout
// ---------------------------------------------------------------------------

export const SPAWN_SPACING = 0.8;
export const SPAWN_BOARD_DISTANCE = 1.5;
export const HEAD_HEIGHT = 1.6;
export const TABLE_HEIGHT = 0.95;
export const HORIZONTAL_BOARD_SIZE: [number, number] = [0.6, 0.4];

/** Participants line up in a row facing the first board, spaced by join order. */
export function spawnPose(joinIndex: number, boards: Board[]): Pose {
  const verticals = boards.filter((b) => b.kind === "vertical");
  let fwd: Vec3;
  let base: Vec3;
  let right: Vec3;
  if (verticals.length > 0) {
    const b = verticals[0];
    fwd = b.pose.frame.forward.scaled(-1.0); // face the board
    base = b.center().sub(fwd.scaled(SPAWN_BOARD_DISTANCE));
    right = lookFrame(fwd).right;
  } else {
    fwd = Z_AXIS;
    base = ZERO;
    right = X_AXIS;
  }
  const offset = (joinIndex - 1.5) * SPAWN_SPACING;
  const pos = new Vec3(base.x + right.x * offset, HEAD_HEIGHT, base.z + right.z * offset);
  return new Pose(pos, lookFrame(fwd));
}

export function defaultHands(head: Pose): [Pose, Pose] {
  const left = new Pose(localToWorld(head, new Vec3(-0.25, -0.45, 0.3)), head.frame);
  const right = new Pose(localToWorld(head, new Vec3(0.25, -0.45, 0.3)), head.frame);
  return [left, right];
}

/** The avatar's horizontal drawing surface, in front of it at table
 * height, with the v axis running away from the user. */
export function makePrivateBoard(avatar: Avatar): Board {
  const fwd = avatar.head.frame.forward;
  const horiz = new Vec3(fwd.x, 0.0, fwd.z);
  const n = horiz.norm();
  const vAxis = n > 1e-9 ? new Vec3(horiz.x / n, 0.0, horiz.z / n) : Z_AXIS;
  const center = new Vec3(
    avatar.head.position.x + vAxis.x * 0.45,
    TABLE_HEIGHT,
    avatar.head.position.z + vAxis.z * 0.45,
  );
  const frame = new Frame(vAxis.cross(Y_AXIS), vAxis, Y_AXIS);
  const [w, h] = HORIZONTAL_BOARD_SIZE;
  return new Board(`h_${avatar.id}`, new Pose(center, frame), w, h, "horizontal", avatar.id);
}

// ---------------------------------------------------------------------------
// Reducer
// ---------------------------------------------------------------------------

function requireAvatar(state: SessionState, avatarId: string): Avatar {
  const av = state.avatars.get(avatarId);
  if (av === undefined) throw new Rejection("unknown_avatar", avatarId);
  return av;
}

function requireBoard(state: SessionState, boardId: string): Board {
  const b = state.board(boardId);
  if (b === null) throw new Rejection("unknown_board", boardId);
  return b;
}

function parsePose(d: JValue, what: string): Pose {
  try {
    const pose = Pose.fromDict(d as JObject);
    pose.validate();
    return pose;
  } catch (exc) {
    if (exc instanceof GeometryError || exc instanceof TypeError) {
      throw new Rejection("bad_pose", `${what}: ${exc.message}`);
    }
    throw exc;
  }
}

/** Wrap to (-pi, pi]. */
export function wrapAngle(a: number): number {
  a = a % (2.0 * Math.PI);
  if (a > Math.PI) {
    a -= 2.0 * Math.PI;
  } else if (a <= -Math.PI) {
    a += 2.0 * Math.PI;
  }
  return a;
}

/** Yaw of a board-local offset around +y (0 along +x, +pi/2 toward -z). */
function handYaw(v: Vec3): number {
  return Math.atan2(-v.z, v.x);
}

/**
 * Validate `msg` against `state` and apply it.  Throws {@link Rejection}
 * (before any mutation) when the event is invalid.  `msg.seq` must be
 * the next sequence number; the reducer advances `state.seq` to it.
 */
export function applyEvent(state: SessionState, msg: Message): void {
  if (!isEventKind(msg.kind)) {
    throw new Rejection("not_an_event", msg.kind);
  }
  if (msg.seq <= state.seq) {
    throw new Rejection("stale_seq", `${msg.seq} <= ${state.seq}`);
  }
  HANDLERS[msg.kind](state, msg);
  state.seq = msg.seq;
}

function onHello(state: SessionState, msg: Message): void {
  if (state.avatars.has(msg.sender)) {
    throw new Rejection("duplicate_id", msg.sender);
  }
  if (!msg.sender) {
    throw new Rejection("bad_id", "empty avatar id");
  }
  const head = spawnPose(state.joinCount, state.boards);
  const [left, right] = defaultHands(head);
  const avatar = new Avatar(msg.sender, msg.payload["name"] as string, head, left, right);
  updateGaze(avatar, state.boards);
  state.avatars.set(msg.sender, avatar);
  state.selections.set(msg.sender, new Selection());
  state.boards.push(makePrivateBoard(avatar));
  state.joinCount += 1;
}

function onGoodbye(state: SessionState, msg: Message): void {
  requireAvatar(state, msg.sender);
  state.avatars.delete(msg.sender);
  state.selections.delete(msg.sender);
  state.telepathy.delete(msg.sender);
  for (const observer of sortedKeys(state.telepathy)) {
    if (state.telepathy.get(observer)!.observee === msg.sender) {
      state.telepathy.delete(observer);
    }
  }
  state.boards = state.boards.filter((b) => b.owner !== msg.sender);
  for (const token of state.locks.values()) {
    if (token.holder === msg.sender) {
      token.holder = null;
    }
    const qi = token.queue.indexOf(msg.sender);
    if (qi >= 0) {
      token.queue.splice(qi, 1);
    }
  }
  for (const [sid, o] of [...state.openStrokes.entries()]) {
    if (o.author === msg.sender) {
      state.openStrokes.delete(sid);
    }
  }
}

function onAvatarUpdate(state: SessionState, msg: Message): void {
  const avatar = requireAvatar(state, msg.sender);
  const head = parsePose(msg.payload["head"], "head");
  const left = parsePose(msg.payload["left"], "left hand");
  const right = parsePose(msg.payload["right"], "right hand");
  avatar.head = head;
  avatar.leftHand = left;
  avatar.rightHand = right;
  updateGaze(avatar, state.boards);
}

function onStrokeBegin(state: SessionState, msg: Message): void {
  const board = requireBoard(state, msg.payload["board"] as string);
  requireAvatar(state, msg.sender);
  if (board.kind !== "vertical") {
    throw new Rejection("bad_board", "strokes are drawn on vertical boards");
  }
  const token = state.locks.get(board.id)!;
  if (token.holder !== msg.sender) {
    throw new Rejection(
      "no_lock", `${msg.sender} does not hold the draw token for ${board.id}`);
  }
  if (state.openStrokeFor(msg.sender, board.id) !== null) {
    throw new Rejection("stroke_open", "previous stroke not ended");
  }
  const color = parseColor(msg.payload["color"]);
  if (!color.every((c) => c >= 0.0 && c <= 1.0)) {
    throw new Rejection("bad_color", "components must lie in [0,1]");
  }
  const strokeId = `st${msg.seq}`;
  state.openStrokes.set(strokeId, new OpenStroke(
    strokeId, board.id, msg.sender, color, num(msg.payload["width"]),
  ));
}

function findOpen(state: SessionState, msg: Message): OpenStroke {
  const boardId = msg.payload["board"] as string;
  const stroke = state.openStrokeFor(msg.sender, boardId);
  if (stroke === null) {
    requireBoard(state, boardId);
    throw new Rejection("no_open_stroke", `${msg.sender} has no open stroke on ${boardId}`);
  }
  return stroke;
}

function onStrokePoints(state: SessionState, msg: Message): void {
  const stroke = findOpen(state, msg);
  const pts = (msg.payload["points"] as JValue[]).map((p) => Vec3.fromList(p));
  stroke.points.push(...pts);
}

function bboxOfPoints(points: Vec3[]): [Vec3, Vec3] {
  const lo = [Infinity, Infinity, Infinity];
  const hi = [-Infinity, -Infinity, -Infinity];
  for (const p of points) {
    const pc = p.components();
    for (let i = 0; i < 3; i++) {
      if (pc[i] < lo[i]) lo[i] = pc[i];
      if (pc[i] > hi[i]) hi[i] = pc[i];
    }
  }
  return [new Vec3(lo[0], lo[1], lo[2]), new Vec3(hi[0], hi[1], hi[2])];
}

/** Distance between two AABBs (0 when they overlap). */
function aabbGap(a: [Vec3, Vec3], b: [Vec3, Vec3]): number {
  let g2 = 0.0;
  const aLo = a[0].components();
  const aHi = a[1].components();
  const bLo = b[0].components();
  const bHi = b[1].components();
  for (let i = 0; i < 3; i++) {
    const gap = Math.max(aLo[i] - bHi[i], bLo[i] - aHi[i], 0.0);
    g2 += gap * gap;
  }
  return Math.sqrt(g2);
}

function onStrokeEnd(state: SessionState, msg: Message): void {
  const stroke = findOpen(state, msg);
  if (stroke.points.length === 0) {
    state.openStrokes.delete(stroke.id);
    return; // nothing was drawn; no sketch results
  }
  const board = state.board(stroke.boardId)!;
  const newBbox = bboxOfPoints(stroke.points);
  // Strokes ended shortly after and near an existing sketch merge into it.
  const window = Math.trunc(MERGE_WINDOW_S * state.tickHz);
  let target: Sketch3D | null = null;
  for (const sk of board.sketches) {
    if (sk.isEmpty() || msg.tick - sk.lastTick > window) continue;
    if (aabbGap(newBbox, sk.localBbox()) > MERGE_DIST) continue;
    if (target === null || sk.lastTick > target.lastTick ||
        (sk.lastTick === target.lastTick && compareCodePoints(sk.id, target.id) < 0)) {
      target = sk;
    }
  }
  state.openStrokes.delete(stroke.id);
  const done = new Stroke(stroke.id, stroke.points, stroke.color, stroke.width);
  if (target !== null) {
    // Re-express the drawn points in the sketch's content space so the
    // sketch transform does not double-apply.
    done.points = done.points.map((p) => target!.untransformPoint(p));
    target.strokes.push(done);
    target.lastTick = msg.tick;
    return;
  }
  const [lo, hi] = newBbox;
  const pivot = new Vec3((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, (lo.z + hi.z) / 2.0);
  board.sketches.push(new Sketch3D(
    `sk${msg.seq}`, board.id, [done], [], ZERO, 0.0, 1.0, pivot, msg.tick,
  ));
}

function onSketchOp(state: SessionState, msg: Message): void {
  const op = msg.payload["op"];
  if (op === "select") {
    opSelect(state, msg);
  } else if (op === "choose") {
    opChoose(state, msg);
  } else if (op === "update") {
    opUpdate(state, msg);
  } else if (op === "commit") {
    opCommit(state, msg);
  } else if (op === "spawn") {
    opSpawn(state, msg);
  }
}

function opSpawn(state: SessionState, msg: Message): void {
  const board = requireBoard(state, msg.payload["board"] as string);
  requireAvatar(state, msg.sender);
  if (board.kind !== "vertical") {
    throw new Rejection("bad_board", "primitives spawn on vertical boards");
  }
  const center = Vec3.fromList(msg.payload["center"]);
  const size = Vec3.fromList(msg.payload["size"]);
  const color = parseColor(msg.payload["color"]);
  if (!color.every((c) => c >= 0.0 && c <= 1.0)) {
    throw new Rejection("bad_color", "components must lie in [0,1]");
  }
  const prim = new Primitive(msg.payload["shape"] as string, center, size, color);
  board.sketches.push(new Sketch3D(
    `sk${msg.seq}`, board.id, [], [prim], ZERO, 0.0, 1.0, center, msg.tick,
  ));
}

function opSelect(state: SessionState, msg: Message): void {
  requireAvatar(state, msg.sender);
  const sel = state.selection(msg.sender);
  if (sel.mode === "op") {
    throw new Rejection("op_active", "cannot re-select during an operation");
  }
  let ray: Ray;
  try {
    ray = Ray.fromDict(msg.payload["ray"] as JObject);
  } catch (exc) {
    if (exc instanceof GeometryError) {
      throw new Rejection("bad_ray", exc.message);
    }
    throw exc;
  }
  if (Math.abs(ray.direction.norm() - 1.0) > 1e-6) {
    throw new Rejection("bad_ray", "direction must be unit length");
  }
  let best: [number, string] | null = null;
  for (const board of state.boards) {
    for (const sk of board.sketches) {
      if (sk.isEmpty()) continue;
      const [lo0, hi0] = sk.worldBbox(board.pose);
      const lo = new Vec3(lo0.x - PICK_INFLATE, lo0.y - PICK_INFLATE, lo0.z - PICK_INFLATE);
      const hi = new Vec3(hi0.x + PICK_INFLATE, hi0.y + PICK_INFLATE, hi0.z + PICK_INFLATE);
      const t = rayAabbIntersect(ray, lo, hi);
      if (t === null) continue;
      if (best === null || t < best[0] ||
          (t === best[0] && compareCodePoints(sk.id, best[1]) < 0)) {
        best = [t, sk.id];
      }
    }
  }
  if (best === null) {
    state.selections.set(msg.sender, new Selection());
  } else {
    state.selections.set(msg.sender, new Selection("selected", best[1]));
  }
}

function opChoose(state: SessionState, msg: Message): void {
  const avatar = requireAvatar(state, msg.sender);
  const sel = state.selection(msg.sender);
  if (sel.mode !== "selected") {
    throw new Rejection("not_selected", "choose requires an open pie menu");
  }
  const slot = msg.payload["slot"] as string;
  const found = state.findSketch(sel.sketchId!);
  if (found === null) {
    throw new Rejection("gone_sketch", sel.sketchId ?? "");
  }
  const [board, sketch] = found;
  if (slot === "delete") {
    board.sketches.splice(board.sketches.indexOf(sketch), 1);
    resetSelectionsFor(state, sketch.id);
    return;
  }
  const hand = parsePose(msg.payload["hand"], "hand");
  const [lo, hi] = sketch.worldBbox(board.pose);
  const worldCenter = new Vec3(
    (lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, (lo.z + hi.z) / 2.0);
  const center0 = worldToLocal(board.pose, worldCenter);
  const hand0 = worldToLocal(board.pose, hand.position);
  const axis0 = worldToLocalDir(board.pose, avatar.head.frame.forward);
  const next = new Selection("op", sketch.id);
  next.op = slot;
  next.hand0 = hand0;
  next.center0 = center0;
  next.axis0 = axis0;
  next.dist0 = hand0.sub(center0).norm();
  next.phiLast = handYaw(hand0.sub(center0));
  state.selections.set(msg.sender, next);
}

function resetSelectionsFor(state: SessionState, sketchId: string): void {
  for (const aid of sortedKeys(state.selections)) {
    if (state.selections.get(aid)!.sketchId === sketchId) {
      state.selections.set(aid, new Selection());
    }
  }
}

function opUpdate(state: SessionState, msg: Message): void {
  requireAvatar(state, msg.sender);
  const sel = state.selection(msg.sender);
  if (sel.mode !== "op") {
    throw new Rejection("not_active", "no operation in progress");
  }
  const found = state.findSketch(sel.sketchId!);
  if (found === null) {
    throw new Rejection("gone_sketch", sel.sketchId ?? "");
  }
  const [board] = found;
  const hand = parsePose(msg.payload["hand"], "hand");
  const handLocal = worldToLocal(board.pose, hand.position);
  if (sel.op === "move" || sel.op === "copy") {
    sel.pendTrans = handLocal.sub(sel.hand0!);
  } else if (sel.op === "move_away") {
    const d = handLocal.sub(sel.hand0!).dot(sel.axis0!);
    sel.pendTrans = sel.axis0!.scaled(d);
  } else if (sel.op === "rotate") {
    const phi = handYaw(handLocal.sub(sel.center0!));
    sel.pendRot += wrapAngle(phi - sel.phiLast);
    sel.phiLast = phi;
  } else if (sel.op === "scale") {
    if (sel.dist0 > 1e-9) {
      const ratio = handLocal.sub(sel.center0!).norm() / sel.dist0;
      sel.pendScale = Math.min(Math.max(ratio, SCALE_CLAMP[0]), SCALE_CLAMP[1]);
    }
  }
}

function rotateY(v: Vec3, angle: number): Vec3 {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  return new Vec3(v.x * c + v.z * s, v.y, -v.x * s + v.z * c);
}

function opCommit(state: SessionState, msg: Message): void {
  requireAvatar(state, msg.sender);
  const sel = state.selection(msg.sender);
  if (sel.mode !== "op") {
    throw new Rejection("not_active", "no operation in progress");
  }
  const found = state.findSketch(sel.sketchId!);
  if (found === null) {
    throw new Rejection("gone_sketch", sel.sketchId ?? "");
  }
  const [board, sketch] = found;
  if (sel.op === "move" || sel.op === "move_away") {
    sketch.translation = sketch.translation.add(sel.pendTrans);
  } else if (sel.op === "rotate") {
    // Rotate the placed content about the anchor center: compose the
    // extra yaw into the transform and fix up the translation.
    const arm = sketch.pivot.add(sketch.translation).sub(sel.center0!);
    sketch.translation = sel.center0!.sub(sketch.pivot).add(rotateY(arm, sel.pendRot));
    sketch.rotation += sel.pendRot;
  } else if (sel.op === "scale") {
    const arm = sketch.pivot.add(sketch.translation).sub(sel.center0!);
    sketch.translation = sel.center0!.sub(sketch.pivot).add(arm.scaled(sel.pendScale));
    sketch.scale *= sel.pendScale;
  } else if (sel.op === "copy") {
    const clone = sketch.deepCopy(`sk${msg.seq}`);
    clone.translation = clone.translation.add(sel.pendTrans);
    clone.lastTick = msg.tick;
    board.sketches.push(clone);
  }
  sketch.lastTick = msg.tick;
  state.selections.set(msg.sender, new Selection("selected", sketch.id));
}

function onDrawRequest(state: SessionState, msg: Message): void {
  const board = requireBoard(state, msg.payload["board"] as string);
  requireAvatar(state, msg.sender);
  let token = state.locks.get(board.id);
  if (token === undefined) {
    token = new DrawToken();
    state.locks.set(board.id, token);
  }
  if (token.holder === msg.sender || token.queue.includes(msg.sender)) {
    return; // duplicate request; harmless
  }
  token.queue.push(msg.sender);
}

function onDrawGrant(state: SessionState, msg: Message): void {
  const board = requireBoard(state, msg.payload["board"] as string);
  const token = state.locks.get(board.id)!;
  const holder = msg.payload["holder"] as string;
  if (token.holder !== null) {
    throw new Rejection("token_held", `${board.id} already granted to ${token.holder}`);
  }
  if (token.queue.length === 0 || token.queue[0] !== holder) {
    throw new Rejection("bad_grant", `${holder} is not at the head of the queue`);
  }
  token.holder = token.queue.shift()!;
}

function onDrawRelease(state: SessionState, msg: Message): void {
  const board = requireBoard(state, msg.payload["board"] as string);
  const token = state.locks.get(board.id)!;
  if (token.holder !== msg.sender) {
    throw new Rejection(
      "not_holder", `${msg.sender} does not hold the token for ${board.id}`);
  }
  if (state.openStrokeFor(msg.sender, board.id) !== null) {
    throw new Rejection("stroke_open", "end the stroke before releasing the pen");
  }
  token.holder = null;
}

function onConfigSwitch(state: SessionState, msg: Message): void {
  state.config = msg.payload["config"] as string;
}

function onTelepathySet(state: SessionState, msg: Message): void {
  requireAvatar(state, msg.sender);
  const observee = msg.payload["observee"] as string | null;
  if (observee === null) {
    state.telepathy.delete(msg.sender);
    return;
  }
  if (observee === msg.sender) {
    throw new Rejection("self_observe", "cannot observe yourself");
  }
  requireAvatar(state, observee);
  state.telepathy.set(msg.sender, {
    observee,
    mode: msg.payload["mode"] as string,
  });
}

const HANDLERS: Record<EventKind, (state: SessionState, msg: Message) => void> = {
  hello: onHello,
  goodbye: onGoodbye,
  avatar_update: onAvatarUpdate,
  stroke_begin: onStrokeBegin,
  stroke_points: onStrokePoints,
  stroke_end: onStrokeEnd,
  sketch_op: onSketchOp,
  draw_request: onDrawRequest,
  draw_grant: onDrawGrant,
  draw_release: onDrawRelease,
  config_switch: onConfigSwitch,
  telepathy_set: onTelepathySet,
};

/** Boards whose token is free but queued: [board id, next holder]. */
export function pendingGrants(state: SessionState): Array<[string, string]> {
  const due: Array<[string, string]> = [];
  for (const boardId of sortedKeys(state.locks)) {
    const token = state.locks.get(boardId)!;
    if (token.holder === null && token.queue.length > 0) {
      due.push([boardId, token.queue[0]]);
    }
  }
  return due;
}
