/**
 * Browser entry point.
 *
 * Connects to a relay over a binary web socket, maintains the local
 * replica via {@link ClientSession}, and drives a single-threaded
 * render loop: network messages are queued as they arrive and applied
 * between animation frames, never mid-draw.  All input becomes relay
 * events; the canvas always shows the replica (plus local in-progress
 * stroke preview), so what you see is what everyone sees.
 *
 * URL parameters:
 *   relay  — web socket address (default ws://<host>/ or ws://127.0.0.1:7447)
 *   avatar — avatar id (default a random guest id)
 *   name   — display name (default the avatar id)
 *   config — initial spatial configuration to request after joining
 */

import { JObject, real } from "./canonical.js";
import { OrbitCamera } from "./camera.js";
import { composeView, gazeBoard, mapHorizontalToVertical } from "./compose.js";
import { CONFIG_KINDS, PieSlot, TELEPATHY_MODES } from "./frames.js";
import { Ray, Vec3, rayPlaneIntersect, worldToLocal } from "./geometry.js";
import { Board, SessionState } from "./model.js";
import { DEAD_ZONE_FRACTION, slotAt } from "./pie.js";
import { Canvas2DLike, OpenStrokeView, PieOverlay, renderFrame } from "./render.js";
import { ClientSession } from "./session.js";

const POSE_PUBLISH_MS = 100; // ~10 Hz
const HEARTBEAT_MS = 2000;
const RECONNECT_MS = 800;
const PIE_RADIUS = 86;
const STROKE_SEND_MS = 50; // batch pen samples at ~20 Hz
const TOAST_MS = 2600;

const PALETTE: Array<[number, number, number]> = [
  [0.9, 0.9, 0.95],
  [0.95, 0.45, 0.35],
  [0.4, 0.8, 0.45],
  [0.45, 0.6, 0.95],
  [0.95, 0.8, 0.3],
];

function urlParam(name: string): string | null {
  return new URLSearchParams(window.location.search).get(name);
}

function defaultRelay(): string {
  const host = window.location.hostname || "127.0.0.1";
  return `ws://${host}:7447`;
}

interface PenStroke {
  board: string; // vertical board the ink lands on
  color: [number, number, number];
  width: number;
  unsent: Vec3[]; // board-local points not yet streamed
  preview: Vec3[]; // every point, for local echo
  lastSend: number;
}

interface PieState {
  x: number;
  y: number;
  sketchId: string;
  depth: number; // camera-ray depth used for gesture hand poses
  stage: "menu" | "drag";
  hovered: PieSlot | null;
  retained: PieSlot | null;
  lastUpdate: number;
}

class App {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: Canvas2DLike;
  private readonly camera = new OrbitCamera();
  private readonly avatarId: string;
  private readonly name: string;
  private readonly relayUrl: string;
  private readonly initialConfig: string | null;

  private session: ClientSession | null = null;
  private drawMode = false;
  private color: [number, number, number] = PALETTE[0];
  private strokeWidth = 0.01;
  private pen: PenStroke | null = null;
  private pie: PieState | null = null;
  private toast: { text: string; until: number } | null = null;
  private banner: string | null = "connecting…";
  private requestedBoard: string | null = null; // board we queued a pen request on
  private lastPosePublish = 0;
  private lastPoseJson = "";
  private drag: {
    x: number; y: number; button: number; moved: boolean; shift: boolean;
  } | null = null;

  constructor() {
    this.canvas = document.getElementById("canvas") as HTMLCanvasElement;
    this.ctx = this.canvas.getContext("2d") as unknown as Canvas2DLike;
    this.avatarId = urlParam("avatar") ?? `guest${Math.floor(Math.random() * 10000)}`;
    this.name = urlParam("name") ?? this.avatarId;
    this.relayUrl = urlParam("relay") ?? defaultRelay();
    this.initialConfig = urlParam("config");
    this.bindUi();
    this.connect();
    window.addEventListener("resize", () => this.resize());
    this.resize();
    const loop = () => {
      this.frame();
      window.requestAnimationFrame(loop);
    };
    window.requestAnimationFrame(loop);
    window.setInterval(() => this.publishPose(), POSE_PUBLISH_MS);
    window.setInterval(() => this.heartbeat(), HEARTBEAT_MS);
    window.setInterval(() => this.refreshTelepathyTargets(), 1000);
  }

  // -- connection ------------------------------------------------------------

  private connect(): void {
    this.banner = `connecting to ${this.relayUrl}…`;
    const socket = new WebSocket(this.relayUrl);
    const session = new ClientSession(socket, this.avatarId, {
      name: this.name,
      autoDrain: false, // applied in frame(), between renders
    });
    this.session = session;
    session.onNack = (msg) => {
      const code = msg.payload["code"];
      const of = msg.payload["of_kind"];
      this.showToast(`rejected: ${of} (${code})`);
      if (of === "sketch_op" && this.pie !== null) {
        // Roll the gesture back to the open menu; the replica keeps the
        // selection, so chaining continues from there.
        this.pie.stage = "menu";
        this.pie.hovered = null;
      }
      if (of === "hello") {
        // Stale avatar id still registered (e.g. quick reload); retry
        // shortly — the relay drops the old connection on its next tick.
        window.setTimeout(() => {
          if (this.session === session && session.state === null) {
            session.send("hello", { name: this.name });
          }
        }, RECONNECT_MS);
      }
    };
    session.onClose = () => {
      if (this.session !== session) return;
      this.banner = "connection lost — reconnecting…";
      this.pen = null;
      this.pie = null;
      window.setTimeout(() => {
        if (this.session === session) this.connect();
      }, RECONNECT_MS);
    };
    session
      .join(10000)
      .then(() => {
        this.banner = null;
        if (
          this.initialConfig !== null &&
          (CONFIG_KINDS as readonly string[]).includes(this.initialConfig) &&
          session.state !== null &&
          session.state.config !== this.initialConfig
        ) {
          session.send("config_switch", { config: this.initialConfig });
        }
      })
      .catch(() => {
        // join timed out; the close handler (or hello retry) takes over.
      });
  }

  private state(): SessionState | null {
    return this.session?.state ?? null;
  }

  // -- per-frame -------------------------------------------------------------

  private frame(): void {
    const session = this.session;
    if (session !== null) {
      session.drain();
    }
    const state = this.state();
    if (this.toast !== null && performance.now() > this.toast.until) {
      this.toast = null;
    }
    this.reconcilePie(state);

    let scene: JObject;
    if (state !== null) {
      scene = composeView(state, this.avatarId).toDict();
    } else {
      scene = {
        viewer: this.avatarId, config: "side_by_side",
        placements: [], boards: [], telepathy: null,
      };
    }
    const openStrokes = this.openStrokeViews(state);
    renderFrame(this.ctx, {
      width: this.canvas.width,
      height: this.canvas.height,
      camera: this.camera,
      scene,
      openStrokes,
      pie: this.pieOverlay(),
      banner: this.banner,
      toast: this.toast?.text ?? null,
      statusLine: this.statusLine(state),
      grid: true,
    });
  }

  /** Live strokes: everyone's open strokes from the replica, with the
   * local unacknowledged pen tail appended. */
  private openStrokeViews(state: SessionState | null): OpenStrokeView[] {
    const views: OpenStrokeView[] = [];
    if (state !== null) {
      for (const os of state.openStrokes.values()) {
        views.push({
          board: os.boardId,
          points: os.points,
          color: os.color,
          width: os.width,
        });
      }
    }
    if (this.pen !== null && this.pen.preview.length > 0) {
      views.push({
        board: this.pen.board,
        points: this.pen.preview,
        color: this.pen.color,
        width: this.pen.width,
      });
    }
    return views;
  }

  private statusLine(state: SessionState | null): string {
    if (state === null) return "joining…";
    const parts: string[] = [
      `${this.name} | ${state.config} | ${this.drawMode ? "draw" : "navigate"} mode`,
    ];
    const boardId = this.penTargetBoard(state);
    if (boardId !== null) {
      const token = state.locks.get(boardId);
      if (token !== undefined) {
        if (token.holder === this.avatarId) {
          parts.push(`pen on ${boardId}: yours`);
        } else if (token.queue.includes(this.avatarId)) {
          const ahead =
            token.queue.indexOf(this.avatarId) + (token.holder !== null ? 1 : 0);
          parts.push(`pen on ${boardId}: queued (${ahead} ahead)`);
        } else if (token.holder !== null) {
          parts.push(`pen on ${boardId}: held by ${token.holder}`);
        } else {
          parts.push(`pen on ${boardId}: free`);
        }
      }
    }
    const pending = this.session?.pending.length ?? 0;
    if (pending > 0) {
      parts.push(`pending: ${pending}`);
    }
    return parts.join("  |  ");
  }

  /** The vertical board pen input lands on right now. */
  private penTargetBoard(state: SessionState): string | null {
    if (this.pen !== null) return this.pen.board;
    if (this.requestedBoard !== null) return this.requestedBoard;
    const avatar = state.avatars.get(this.avatarId);
    if (avatar === undefined) return null;
    return gazeBoard(avatar, state.boards);
  }

  // -- avatar pose publishing --------------------------------------------------

  private publishPose(): void {
    const session = this.session;
    if (session === null || session.state === null || !session.connected) return;
    const head = this.camera.headPose();
    const [left, right] = this.camera.handPoses();
    const payload = {
      head: head.toDict(),
      left: left.toDict(),
      right: right.toDict(),
    };
    const key = JSON.stringify(`${head.position.x},${head.position.y},${head.position.z},${this.camera.yaw},${this.camera.pitch}`);
    const now = performance.now();
    if (key === this.lastPoseJson && now - this.lastPosePublish < 1000) {
      return; // unchanged; re-publish once a second as presence keepalive
    }
    this.lastPoseJson = key;
    this.lastPosePublish = now;
    session.send("avatar_update", payload);
  }

  private heartbeat(): void {
    const session = this.session;
    if (session !== null && session.connected && !session.closed) {
      session.send("heartbeat", {});
    }
  }

  // -- input -----------------------------------------------------------------

  private bindUi(): void {
    const byId = (id: string) => document.getElementById(id);
    byId("cfg-side")?.addEventListener("click", () => this.sendConfig("side_by_side"));
    byId("cfg-mirror")?.addEventListener("click", () => this.sendConfig("mirrored"));
    byId("cfg-eyes")?.addEventListener("click", () => this.sendConfig("eyes_free"));
    byId("mode-toggle")?.addEventListener("click", () => {
      this.drawMode = !this.drawMode;
      const el = byId("mode-toggle");
      if (el) el.textContent = this.drawMode ? "✏ drawing" : "🧭 navigate";
    });
    byId("release-pen")?.addEventListener("click", () => this.releasePen());
    byId("spawn-cube")?.addEventListener("click", () => this.spawn("cube"));
    byId("spawn-sphere")?.addEventListener("click", () => this.spawn("sphere"));
    byId("spawn-cylinder")?.addEventListener("click", () => this.spawn("cylinder"));
    byId("telepathy-go")?.addEventListener("click", () => this.startTelepathy());
    byId("telepathy-stop")?.addEventListener("click", () => {
      this.session?.send("telepathy_set", { observee: null, mode: "windowed" });
    });
    const palette = byId("palette");
    if (palette) {
      PALETTE.forEach((rgb, i) => {
        const b = document.createElement("button");
        b.className = "swatch";
        b.style.background = `rgb(${rgb.map((c) => Math.round(c * 255)).join(",")})`;
        b.title = `color ${i + 1}`;
        b.addEventListener("click", () => {
          this.color = rgb;
        });
        palette.appendChild(b);
      });
    }
    this.canvas.addEventListener("mousedown", (ev) => this.onMouseDown(ev));
    window.addEventListener("mousemove", (ev) => this.onMouseMove(ev));
    window.addEventListener("mouseup", (ev) => this.onMouseUp(ev));
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.camera.zoom(ev.deltaY > 0 ? 1.1 : 1 / 1.1);
    }, { passive: false });
    window.addEventListener("keydown", (ev) => {
      if (ev.key === "Escape") this.clearSelection();
    });
    window.addEventListener("beforeunload", () => {
      this.session?.close(true);
    });
  }

  private sendConfig(config: string): void {
    this.session?.send("config_switch", { config });
  }

  private releasePen(): void {
    const state = this.state();
    if (state === null || this.session === null) return;
    for (const [boardId, token] of state.locks) {
      if (token.holder === this.avatarId) {
        this.session.send("draw_release", { board: boardId });
      }
    }
    this.requestedBoard = null;
  }

  private spawn(shape: string): void {
    const state = this.state();
    const session = this.session;
    if (state === null || session === null) return;
    const avatar = state.avatars.get(this.avatarId);
    if (avatar === undefined) return;
    const boardId = gazeBoard(avatar, state.boards);
    if (boardId === null) return;
    const size: [number, number, number] =
      shape === "cube" ? [0.3, 0.3, 0.3]
        : shape === "sphere" ? [0.25, 0.25, 0.25]
          : [0.2, 0.3, 0.2];
    session.send("sketch_op", {
      op: "spawn",
      board: boardId,
      shape,
      center: new Vec3(0.0, 0.0, 0.08).toList(),
      size: new Vec3(size[0], size[1], size[2]).toList(),
      color: this.color.map((c) => real(c)),
    });
  }

  private startTelepathy(): void {
    const target = (document.getElementById("telepathy-target") as HTMLSelectElement)?.value;
    const mode = (document.getElementById("telepathy-mode") as HTMLSelectElement)?.value;
    if (!target || !(TELEPATHY_MODES as readonly string[]).includes(mode)) return;
    this.session?.send("telepathy_set", { observee: target, mode });
  }

  private refreshTelepathyTargets(): void {
    const state = this.state();
    const select = document.getElementById("telepathy-target") as HTMLSelectElement | null;
    if (state === null || select === null) return;
    const current = select.value;
    const ids = [...state.avatars.keys()].filter((id) => id !== this.avatarId).sort();
    const existing = [...select.options].map((o) => o.value);
    if (JSON.stringify(ids) === JSON.stringify(existing)) return;
    select.innerHTML = "";
    for (const id of ids) {
      const opt = document.createElement("option");
      opt.value = id;
      opt.textContent = id;
      select.appendChild(opt);
    }
    if (ids.includes(current)) select.value = current;
  }

  private showToast(text: string): void {
    this.toast = { text, until: performance.now() + TOAST_MS };
  }

  private clearSelection(): void {
    // A ray pointing straight down from far below hits nothing.
    const miss = new Ray(new Vec3(0.0, -1000.0, 0.0), new Vec3(0.0, -1.0, 0.0));
    this.session?.send("sketch_op", { op: "select", ray: miss.toDict() });
    this.pie = null;
  }

  // -- pen -------------------------------------------------------------------

  /** Board-local ink position under the cursor: a direct hit on a
   * vertical board, or (eyes-free) a table hit mapped up to the gaze
   * board.  Returns the vertical board it lands on. */
  private inkAt(sx: number, sy: number): { board: Board; local: Vec3 } | null {
    const state = this.state();
    if (state === null) return null;
    const { origin, direction } = this.camera.screenRay(
      sx, sy, this.canvas.width, this.canvas.height);
    const ray = new Ray(origin, direction);
    let best: { board: Board; local: Vec3; t: number } | null = null;
    for (const board of state.verticalBoards()) {
      const hit = rayPlaneIntersect(ray, board.plane());
      if (hit === null) continue;
      const local = worldToLocal(board.pose, hit.point);
      if (!board.containsLocal(local)) continue;
      if (best === null || hit.t < best.t) {
        best = { board, local, t: hit.t };
      }
    }
    // Eyes-free: the private table maps onto the gaze board.
    if (state.config === "eyes_free") {
      const hBoard = state.board(`h_${this.avatarId}`);
      const avatar = state.avatars.get(this.avatarId);
      if (hBoard !== null && avatar !== undefined) {
        const hit = rayPlaneIntersect(ray, hBoard.plane());
        if (hit !== null && (best === null || hit.t < best.t)) {
          const local = worldToLocal(hBoard.pose, hit.point);
          if (hBoard.containsLocal(local)) {
            const vId = gazeBoard(avatar, state.boards);
            const vBoard = vId !== null ? state.board(vId) : null;
            if (vBoard !== null) {
              const u = local.x / hBoard.width;
              const v = local.y / hBoard.height;
              const world = mapHorizontalToVertical(u, v, hBoard, vBoard);
              return { board: vBoard, local: worldToLocal(vBoard.pose, world) };
            }
          }
        }
      }
    }
    return best === null ? null : { board: best.board, local: best.local };
  }

  private onMouseDown(ev: MouseEvent): void {
    const sx = ev.offsetX;
    const sy = ev.offsetY;
    const state = this.state();
    const session = this.session;

    // An open pie menu captures the pointer.
    if (this.pie !== null && this.pie.stage === "menu" && ev.button === 0) {
      const dx = sx - this.pie.x;
      const dy = sy - this.pie.y;
      if (Math.hypot(dx, dy) <= PIE_RADIUS * 1.15) {
        this.pie.stage = "drag";
        this.pie.hovered = null;
        ev.preventDefault();
        return;
      }
      // Clicking elsewhere dismisses the menu (and the selection).
      this.clearSelection();
    }

    if (ev.button === 0 && this.drawMode && state !== null && session !== null) {
      const ink = this.inkAt(sx, sy);
      if (ink !== null) {
        const token = state.locks.get(ink.board.id);
        if (token === undefined || token.holder !== this.avatarId) {
          // First draw attempt requests the pen; the indicator shows the
          // queue position until the grant arrives.
          session.send("draw_request", { board: ink.board.id });
          this.requestedBoard = ink.board.id;
          this.showToast(`pen requested on ${ink.board.id} — you are queued`);
          return;
        }
        session.send("stroke_begin", {
          board: ink.board.id,
          color: this.color.map((c) => real(c)),
          width: real(this.strokeWidth),
        });
        this.pen = {
          board: ink.board.id,
          color: this.color,
          width: this.strokeWidth,
          unsent: [ink.local],
          preview: [ink.local],
          lastSend: performance.now(),
        };
        return;
      }
    }

    this.drag = {
      x: sx, y: sy, button: ev.button, moved: false, shift: ev.shiftKey,
    };
  }

  private onMouseMove(ev: MouseEvent): void {
    const sx = ev.offsetX;
    const sy = ev.offsetY;

    if (this.pie !== null && this.pie.stage === "drag") {
      this.drivePie(sx, sy);
      return;
    }

    if (this.pen !== null) {
      const ink = this.inkAt(sx, sy);
      if (ink !== null && ink.board.id === this.pen.board) {
        this.pen.unsent.push(ink.local);
        this.pen.preview.push(ink.local);
        const now = performance.now();
        if (now - this.pen.lastSend >= STROKE_SEND_MS) {
          this.flushPen();
        }
      }
      return;
    }

    if (this.drag !== null) {
      const dx = sx - this.drag.x;
      const dy = sy - this.drag.y;
      if (Math.hypot(dx, dy) > 3) this.drag.moved = true;
      if (this.drag.button === 1 || this.drag.shift) {
        const scale = this.camera.dist * 0.0015;
        this.camera.pan(-dx * scale, dy * scale);
      } else if (this.drag.button === 0 || this.drag.button === 2) {
        this.camera.orbit(-dx * 0.005, -dy * 0.005);
      }
      this.drag.x = sx;
      this.drag.y = sy;
    }
  }

  private onMouseUp(ev: MouseEvent): void {
    const sx = ev.offsetX;
    const sy = ev.offsetY;
    const session = this.session;

    if (this.pie !== null && this.pie.stage === "drag") {
      const state = this.state();
      const sel = state?.selections.get(this.avatarId);
      if (sel !== undefined && sel.mode === "op") {
        session?.send("sketch_op", { op: "commit" });
        this.pie.retained = this.pie.hovered;
      }
      // Released inside the dead zone without choosing: back to the menu.
      this.pie.stage = "menu";
      this.pie.hovered = null;
      return;
    }

    if (this.pen !== null) {
      this.flushPen();
      session?.send("stroke_end", { board: this.pen.board });
      this.pen = null;
      return;
    }

    if (this.drag !== null && !this.drag.moved && this.drag.button === 0 &&
        !this.drawMode && session !== null) {
      // A clean click: ask the relay what the pick ray hits.
      const { origin, direction } = this.camera.screenRay(
        sx, sy, this.canvas.width, this.canvas.height);
      const ray = new Ray(origin, direction);
      session.send("sketch_op", { op: "select", ray: ray.toDict() });
      // If it lands on a sketch, reconcilePie opens the menu here.
      this.pie = {
        x: sx, y: sy, sketchId: "", depth: this.camera.dist,
        stage: "menu", hovered: null, retained: null, lastUpdate: 0,
      };
    }
    this.drag = null;
  }

  /** While dragging in the menu: entering a sector chooses the slot;
   * further motion streams gesture updates. */
  private drivePie(sx: number, sy: number): void {
    const pie = this.pie!;
    const state = this.state();
    const session = this.session;
    if (state === null || session === null) return;
    const sel = state.selections.get(this.avatarId);
    const dx = sx - pie.x;
    const dy = sy - pie.y;

    if (sel !== undefined && sel.mode === "op") {
      // Operation running: stream hand updates (throttled).
      const now = performance.now();
      pie.hovered = sel.op as PieSlot;
      if (now - pie.lastUpdate >= STROKE_SEND_MS) {
        pie.lastUpdate = now;
        const hand = this.camera.cursorPose(
          sx, sy, this.canvas.width, this.canvas.height, pie.depth);
        session.send("sketch_op", { op: "update", hand: hand.toDict() });
      }
      return;
    }

    const slot = slotAt(dx, dy, PIE_RADIUS * DEAD_ZONE_FRACTION);
    pie.hovered = slot;
    if (slot !== null && sel !== undefined && sel.mode === "selected" &&
        !session.pending.includes("sketch_op")) {
      const hand = this.camera.cursorPose(
        sx, sy, this.canvas.width, this.canvas.height, pie.depth);
      session.send("sketch_op", { op: "choose", slot, hand: hand.toDict() });
    }
  }

  private flushPen(): void {
    const pen = this.pen;
    const session = this.session;
    if (pen === null || session === null || pen.unsent.length === 0) return;
    session.send("stroke_points", {
      board: pen.board,
      points: pen.unsent.map((p) => p.toList()),
    });
    pen.unsent = [];
    pen.lastSend = performance.now();
  }

  /** Keep the pie overlay consistent with the replica's authoritative
   * selection state. */
  private reconcilePie(state: SessionState | null): void {
    if (state === null) {
      this.pie = null;
      return;
    }
    const sel = state.selections.get(this.avatarId);
    if (sel === undefined || sel.mode === "idle") {
      if (this.pie !== null && this.pie.stage !== "drag") {
        this.pie = null;
      }
      return;
    }
    if (this.pie === null) {
      // Selection arrived without a local click (e.g. restored session):
      // open the menu over the sketch.
      const found = state.findSketch(sel.sketchId!);
      if (found === null) return;
      const [board, sketch] = found;
      try {
        const [lo, hi] = sketch.worldBbox(board.pose);
        const center = new Vec3(
          (lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2);
        const s = this.camera.worldToScreen(
          center, this.canvas.width, this.canvas.height);
        if (s === null) return;
        this.pie = {
          x: s.x, y: s.y, sketchId: sel.sketchId!, depth: s.depth,
          stage: "menu", hovered: null, retained: null, lastUpdate: 0,
        };
      } catch {
        return; // empty sketch; nothing to anchor to
      }
      return;
    }
    if (this.pie.sketchId === "" && sel.sketchId !== null) {
      // The select we sent on click has landed; anchor the menu depth to
      // the picked sketch so gesture hands move in its plane.
      this.pie.sketchId = sel.sketchId;
      const found = state.findSketch(sel.sketchId);
      if (found !== null) {
        try {
          const [lo, hi] = found[1].worldBbox(found[0].pose);
          const center = new Vec3(
            (lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2);
          const s = this.camera.worldToScreen(
            center, this.canvas.width, this.canvas.height);
          if (s !== null) this.pie.depth = s.depth;
        } catch {
          // keep the click-ray depth
        }
      }
    }
  }

  private pieOverlay(): PieOverlay | null {
    const state = this.state();
    if (this.pie === null || state === null) return null;
    const sel = state.selections.get(this.avatarId);
    if (sel === undefined || sel.mode === "idle") {
      return null; // waiting for the select round trip
    }
    return {
      centerX: this.pie.x,
      centerY: this.pie.y,
      radius: PIE_RADIUS,
      hovered: this.pie.hovered,
      retained: this.pie.retained,
    };
  }

  private resize(): void {
    this.canvas.width = window.innerWidth;
    this.canvas.height = window.innerHeight - 48; // leave room for the toolbar
  }
}

declare global {
  interface Window {
    app?: App;
  }
}

window.addEventListener("DOMContentLoaded", () => {
  window.app = new App();
});
