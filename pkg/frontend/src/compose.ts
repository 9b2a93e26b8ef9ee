/**
 * Per-viewer scene composition.
 *
 * The replicated session state is the same for everyone; what differs is
 * how each participant sees it.  This module turns (state, viewer) into
 * a {@link ViewerScene}:
 *
 * - side_by_side — everyone appears where they really are.
 * - mirrored — each other participant is reflected across the plane of
 *   the board they are gazing at, so you stand face to face with them
 *   across the content.  Because the mirror is the content plane itself,
 *   a reflected participant's gaze and pointing rays land on the same
 *   board points as the originals.
 * - eyes_free — participants stay at their true positions, but the
 *   viewer additionally gets a private horizontal surface at table height
 *   showing a flattened copy of the board they are looking at; strokes
 *   drawn on the table are mapped up onto the vertical board.
 *
 * Telepathy composes one participant's view for another, either into a
 * small floating window or as a full camera takeover (first or third
 * person).
 *
 * All composition is deterministic and pure: scenes built from equal
 * states hash equal.
 */

import { JObject, JValue, compareCodePoints, digest, real } from "./canonical.js";
import { Pose, Vec3, localToWorld, reflectPose } from "./geometry.js";
import {
  Avatar,
  Board,
  SessionState,
  classifyGaze,
} from "./model.js";

// Telepathy window: anchored ahead and to the upper-left of the observer's
// head, billboarded to the observer.
export const WINDOW_OFFSET = new Vec3(-0.25, 0.15, 0.4);
export const WINDOW_SIZE: [number, number] = [0.32, 0.18];
// Third-person telepathy camera, relative to the observee's head frame.
export const THIRD_PERSON_BACK = 0.5;
export const THIRD_PERSON_UP = 0.3;

/** The avatar's current (hysteresis-stable) gaze board, falling back
 * to a fresh classification before the first committed evaluation. */
export function gazeBoard(avatar: Avatar, boards: Board[]): string | null {
  if (avatar.gazeBoard !== null) {
    return avatar.gazeBoard;
  }
  return classifyGaze(avatar.head, boards);
}

// ---------------------------------------------------------------------------
// Scene types
// ---------------------------------------------------------------------------

export class PlacedAvatar {
  constructor(
    public avatarId: string,
    public name: string,
    public head: Pose,
    public leftHand: Pose,
    public rightHand: Pose,
    public mirrored: boolean,
    public gazeBoard: string | null,
  ) {}

  toDict(): JObject {
    return {
      id: this.avatarId,
      name: this.name,
      head: this.head.toDict(),
      left: this.leftHand.toDict(),
      right: this.rightHand.toDict(),
      mirrored: this.mirrored,
      gaze: this.gazeBoard,
    };
  }
}

export class BoardView {
  constructor(
    public boardId: string,
    public pose: Pose,
    public width: number,
    public height: number,
    public kind: string,
    public sketches: JObject[],
    public sourceBoard: string | null = null, // set on projected (table) views
  ) {}

  toDict(): JObject {
    return {
      id: this.boardId,
      pose: this.pose.toDict(),
      w: real(this.width),
      h: real(this.height),
      kind: this.kind,
      sketches: this.sketches,
      source: this.sourceBoard,
    };
  }
}

export class TelepathyView {
  constructor(
    public mode: string,
    public observee: string,
    public camera: Pose,
    public windowPose: Pose | null = null,
    public windowSize: [number, number] | null = null,
    public scene: JObject | null = null, // the observee's composed scene
  ) {}

  toDict(): JObject {
    return {
      mode: this.mode,
      observee: this.observee,
      camera: this.camera.toDict(),
      window: this.windowPose === null ? null : {
        pose: this.windowPose.toDict(),
        w: real(this.windowSize![0]),
        h: real(this.windowSize![1]),
      },
      scene: this.scene,
    };
  }
}

export class ViewerScene {
  constructor(
    public viewerId: string,
    public config: string,
    public placements: PlacedAvatar[] = [],
    public boardViews: BoardView[] = [],
    public telepathy: TelepathyView | null = null,
  ) {}

  toDict(): JObject {
    return {
      viewer: this.viewerId,
      config: this.config,
      placements: this.placements.map((p) => p.toDict()),
      boards: this.boardViews.map((b) => b.toDict()),
      telepathy: this.telepathy === null ? null : this.telepathy.toDict(),
    };
  }

  contentHash(): string {
    return digest(this.toDict());
  }
}

// ---------------------------------------------------------------------------
// Eyes-free coordinate mapping
// ---------------------------------------------------------------------------

/**
 * World point on the vertical board for a normalized table position.
 *
 * (u, v) is the position on the horizontal board as a fraction of its
 * extent (each in [-0.5, 0.5]; u along the table's right, v along the
 * axis running away from the user).  The same fraction lands on the
 * vertical board, with away-from-user becoming up — so resizing the
 * table for coarser or finer hand motion never moves where marks appear
 * on the board.
 */
export function mapHorizontalToVertical(
  u: number, v: number, hBoard: Board, vBoard: Board,
): Vec3 {
  if (hBoard.kind !== "horizontal" || vBoard.kind !== "vertical") {
    throw new Error("mapping runs from a horizontal to a vertical board");
  }
  if (Math.abs(u) > 0.5 || Math.abs(v) > 0.5) {
    throw new Error(`normalized coordinates out of range: (${u}, ${v})`);
  }
  const local = new Vec3(u * vBoard.width, v * vBoard.height, 0.0);
  return localToWorld(vBoard.pose, local);
}

/** Physical table-local point -> vertical board-local point, by
 * normalizing each surface axis independently (depth rides along with
 * the width rescale). */
export function mapTableToBoard(p: Vec3, hBoard: Board, vBoard: Board): Vec3 {
  const su = vBoard.width / hBoard.width;
  const sv = vBoard.height / hBoard.height;
  return new Vec3(p.x * su, p.y * sv, p.z * su);
}

/** Inverse of {@link mapTableToBoard} (exact up to float division). */
export function mapBoardToTable(p: Vec3, hBoard: Board, vBoard: Board): Vec3 {
  const su = vBoard.width / hBoard.width;
  const sv = vBoard.height / hBoard.height;
  return new Vec3(p.x / su, p.y / sv, p.z / su);
}

/** Project a board-local point onto the board plane (drop depth). */
export function flattenPoint(p: Vec3): Vec3 {
  return new Vec3(p.x, p.y, 0.0);
}

// ---------------------------------------------------------------------------
// Placements per configuration
// ---------------------------------------------------------------------------

function truePlacement(av: Avatar): PlacedAvatar {
  return new PlacedAvatar(
    av.id, av.name, av.head, av.leftHand, av.rightHand, false, av.gazeBoard);
}

function mirroredPlacement(av: Avatar, state: SessionState): PlacedAvatar {
  const boardId = gazeBoard(av, state.boards);
  const board = boardId ? state.board(boardId) : null;
  if (board === null) {
    return truePlacement(av);
  }
  const plane = board.plane();
  return new PlacedAvatar(
    av.id, av.name,
    reflectPose(av.head, plane),
    reflectPose(av.leftHand, plane),
    reflectPose(av.rightHand, plane),
    true, boardId,
  );
}

function others(state: SessionState, viewerId: string): Avatar[] {
  return [...state.avatars.keys()]
    .sort(compareCodePoints)
    .filter((aid) => aid !== viewerId)
    .map((aid) => state.avatars.get(aid)!);
}

function verticalViews(state: SessionState): BoardView[] {
  return state.verticalBoards().map(
    (b) => new BoardView(
      b.id, b.pose, b.width, b.height, b.kind,
      b.sketches.map((s) => s.toDict()),
    ));
}

function bakedStroke(
  points: Vec3[], color: readonly number[], width: number, sid: string,
): JObject {
  return {
    id: sid,
    points: points.map((p) => p.toList()),
    color: color.map((c) => real(c)),
    width: real(width),
  };
}

/** The viewer's horizontal board showing a flattened, rescaled copy of
 * their gaze board's content.  Transforms are baked into the points. */
function projectedTableView(state: SessionState, viewer: Avatar): BoardView | null {
  const hBoard = state.board(`h_${viewer.id}`);
  if (hBoard === null) {
    return null;
  }
  const vId = gazeBoard(viewer, state.boards);
  const vBoard = vId ? state.board(vId) : null;
  const sketches: JObject[] = [];
  if (vBoard !== null) {
    for (const sk of vBoard.sketches) {
      const strokes: JObject[] = [];
      sk.strokes.forEach((stroke, i) => {
        const pts = stroke.points.map(
          (p) => mapBoardToTable(flattenPoint(sk.transformPoint(p)), hBoard, vBoard));
        strokes.push(bakedStroke(pts, stroke.color, stroke.width, `${sk.id}_v${i}`));
      });
      sk.primitives.forEach((prim, i) => {
        // Primitives project as their flattened footprint outline.
        let lo: [number, number] | null = null;
        let hi: [number, number] | null = null;
        for (const corner of prim.cornerPoints()) {
          const q = flattenPoint(sk.transformPoint(corner));
          if (lo === null) {
            lo = [q.x, q.y];
            hi = [q.x, q.y];
          } else {
            lo = [Math.min(lo[0], q.x), Math.min(lo[1], q.y)];
            hi = [Math.max(hi![0], q.x), Math.max(hi![1], q.y)];
          }
        }
        if (prim.shape === "sphere" || prim.shape === "cylinder") {
          const c = sk.transformPoint(prim.center);
          const r = (prim.size.x / 2.0) * sk.scale;
          lo = lo === null ? [c.x - r, c.y - r]
            : [Math.min(lo[0], c.x - r), Math.min(lo[1], c.y - r)];
          hi = hi === null ? [c.x + r, c.y + r]
            : [Math.max(hi[0], c.x + r), Math.max(hi[1], c.y + r)];
        }
        const outline = [
          new Vec3(lo![0], lo![1], 0.0), new Vec3(hi![0], lo![1], 0.0),
          new Vec3(hi![0], hi![1], 0.0), new Vec3(lo![0], hi![1], 0.0),
          new Vec3(lo![0], lo![1], 0.0),
        ];
        const pts = outline.map((q) => mapBoardToTable(q, hBoard, vBoard));
        strokes.push(bakedStroke(pts, prim.color, 0.002, `${sk.id}_p${i}`));
      });
      sketches.push({
        id: `${sk.id}_proj`,
        board: hBoard.id,
        strokes,
        prims: [] as JValue[],
        trans: [real(0.0), real(0.0), real(0.0)],
        rot: real(0.0),
        scale: real(1.0),
        pivot: [real(0.0), real(0.0), real(0.0)],
        last_tick: sk.lastTick,
      });
    }
  }
  return new BoardView(
    hBoard.id, hBoard.pose, hBoard.width, hBoard.height,
    "horizontal", sketches, vId,
  );
}

export function composeSideBySide(state: SessionState, viewerId: string): ViewerScene {
  return new ViewerScene(
    viewerId, "side_by_side",
    others(state, viewerId).map((av) => truePlacement(av)),
    verticalViews(state),
  );
}

export function composeMirrored(state: SessionState, viewerId: string): ViewerScene {
  return new ViewerScene(
    viewerId, "mirrored",
    others(state, viewerId).map((av) => mirroredPlacement(av, state)),
    verticalViews(state),
  );
}

export function composeEyesFree(state: SessionState, viewerId: string): ViewerScene {
  const scene = new ViewerScene(
    viewerId, "eyes_free",
    others(state, viewerId).map((av) => truePlacement(av)),
    verticalViews(state),
  );
  const viewer = state.avatars.get(viewerId);
  if (viewer !== undefined) {
    const table = projectedTableView(state, viewer);
    if (table !== null) {
      scene.boardViews.push(table);
    }
  }
  return scene;
}

const COMPOSERS: Record<string, (state: SessionState, viewerId: string) => ViewerScene> = {
  side_by_side: composeSideBySide,
  mirrored: composeMirrored,
  eyes_free: composeEyesFree,
};

// ---------------------------------------------------------------------------
// Telepathy
// ---------------------------------------------------------------------------

function thirdPersonCamera(head: Pose): Pose {
  const f = head.frame.forward;
  const u = head.frame.up;
  const pos = new Vec3(
    head.position.x - f.x * THIRD_PERSON_BACK + u.x * THIRD_PERSON_UP,
    head.position.y - f.y * THIRD_PERSON_BACK + u.y * THIRD_PERSON_UP,
    head.position.z - f.z * THIRD_PERSON_BACK + u.z * THIRD_PERSON_UP,
  );
  return new Pose(pos, head.frame);
}

function telepathyView(state: SessionState, viewerId: string): TelepathyView | null {
  const link = state.telepathy.get(viewerId);
  if (link === undefined) {
    return null;
  }
  const observee = state.avatars.get(link.observee);
  if (observee === undefined) {
    return null;
  }
  const mode = link.mode;
  // The observee's own scene, with their telepathy suppressed (no nesting).
  const inner = composeView(state, observee.id, false);
  if (mode === "windowed") {
    const viewer = state.avatars.get(viewerId)!;
    return new TelepathyView(
      mode, observee.id, observee.head,
      new Pose(localToWorld(viewer.head, WINDOW_OFFSET), viewer.head.frame),
      WINDOW_SIZE,
      inner.toDict(),
    );
  }
  // Immersive modes: the viewer vacates their own spot in the room (their
  // viewpoint has moved into the observee), so their placement is dropped.
  inner.placements = inner.placements.filter((p) => p.avatarId !== viewerId);
  if (mode === "immersive_first") {
    return new TelepathyView(mode, observee.id, observee.head, null, null, inner.toDict());
  }
  // immersive_third: pull the camera back and up; the observee becomes
  // visible, at their true (unmirrored) pose.
  inner.placements.push(truePlacement(observee));
  inner.placements.sort((a, b) => compareCodePoints(a.avatarId, b.avatarId));
  return new TelepathyView(
    mode, observee.id, thirdPersonCamera(observee.head), null, null, inner.toDict());
}

/** The full scene one participant sees, per the active configuration. */
export function composeView(
  state: SessionState, viewerId: string, includeTelepathy = true,
): ViewerScene {
  const composer = COMPOSERS[state.config];
  if (composer === undefined) {
    throw new Error(`unknown config '${state.config}'`);
  }
  const scene = composer(state, viewerId);
  if (includeTelepathy) {
    scene.telepathy = telepathyView(state, viewerId);
  }
  return scene;
}
