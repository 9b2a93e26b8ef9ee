/**
 * Client session: a web-socket transport plus a local state replica.
 *
 * The session applies the relay's broadcast events to its own
 * {@link SessionState} with the same reducer the relay runs, so after
 * quiescence its state hash matches the relay's and every other
 * client's.  The replica is never mutated directly by UI code; every
 * change goes to the relay and takes effect when the stamped event
 * comes back.
 *
 * Works with both the browser's WebSocket and any API-compatible
 * implementation (tests use the `ws` package).  Frames travel verbatim
 * as binary messages: 4-byte little-endian length prefix plus canonical
 * JSON, exactly as on the raw TCP transport.
 */

import { JObject } from "./canonical.js";
import {
  FrameParser,
  Message,
  ProtocolError,
  encodeFrame,
  makeMessage,
} from "./frames.js";
import { EVENT_KINDS, SessionState, applyEvent, isEventKind } from "./model.js";

export class SessionError extends Error {}

/** The subset of the WebSocket API the session needs (browser WebSocket
 * and the `ws` package both satisfy it). */
export interface WebSocketLike {
  binaryType: string;
  readyState: number;
  send(data: Uint8Array): void;
  close(): void;
  // Handler params are typed `any` so both the DOM WebSocket and the
  // `ws` package (whose handlers take their own event classes) satisfy
  // this interface under strictFunctionTypes.
  /* eslint-disable @typescript-eslint/no-explicit-any */
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  /* eslint-enable @typescript-eslint/no-explicit-any */
}

const SOCKET_OPEN = 1; // WebSocket.OPEN

export interface SessionOptions {
  /** Dispatch messages as they arrive (default).  Turn off to queue
   * them and apply explicitly via {@link ClientSession.drain}, e.g.
   * between render frames on the UI thread. */
  autoDrain?: boolean;
  name?: string;
}

interface Waiter {
  predicate: () => boolean;
  resolve: () => void;
  reject: (err: Error) => void;
  timer: ReturnType<typeof setTimeout>;
  what: string;
}

/** Inputs whose relay echo (or nack) is awaited, for the UI's pending
 * indicator.  Pose streaming is excluded: the relay coalesces it. */
const TRACKED_KINDS = (EVENT_KINDS as readonly string[]).filter(
  (k) => k !== "avatar_update");

export class ClientSession {
  readonly avatarId: string;
  readonly name: string;

  state: SessionState | null = null;
  nacks: Message[] = [];
  lastSnapshot: JObject | null = null;
  lastTick = 0;
  connected = false;
  closed = false;

  /** Kinds of own inputs sent but not yet echoed or nacked by the relay. */
  pending: string[] = [];

  onUpdate: ((msg: Message) => void) | null = null;
  onNack: ((msg: Message) => void) | null = null;
  onClose: (() => void) | null = null;
  onProtocolError: ((err: ProtocolError) => void) | null = null;

  private readonly socket: WebSocketLike;
  private readonly parser = new FrameParser();
  private readonly autoDrain: boolean;
  private outbox: Uint8Array[] = []; // frames queued until the socket opens
  private inbox: Message[] = []; // parsed messages awaiting drain()
  private waiters: Waiter[] = [];

  constructor(socket: WebSocketLike, avatarId: string, options: SessionOptions = {}) {
    this.socket = socket;
    this.avatarId = avatarId;
    this.name = options.name ?? avatarId;
    this.autoDrain = options.autoDrain ?? true;

    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      this.connected = true;
      for (const frame of this.outbox) {
        this.socket.send(frame);
      }
      this.outbox = [];
    };
    socket.onmessage = (ev) => this.onData(ev.data);
    socket.onclose = () => {
      this.connected = false;
      this.closed = true;
      this.failWaiters(new SessionError("connection closed while waiting"));
      if (this.onClose) this.onClose();
    };
    socket.onerror = () => {
      // A close event follows; nothing to do here.
    };
    if (socket.readyState === SOCKET_OPEN) {
      this.connected = true;
    }
  }

  // -- sending ---------------------------------------------------------------

  send(kind: string, payload: JObject = {}): void {
    if (this.closed) {
      throw new SessionError("session is closed");
    }
    const frame = encodeFrame(makeMessage(kind, this.avatarId, payload));
    if (TRACKED_KINDS.includes(kind)) {
      this.pending.push(kind);
    }
    if (this.connected) {
      this.socket.send(frame);
    } else {
      this.outbox.push(frame);
    }
  }

  /** Send hello and wait for the welcome snapshot. */
  async join(timeoutMs = 5000): Promise<SessionState> {
    this.send("hello", { name: this.name });
    await this.waitFor(() => this.state !== null, timeoutMs, "no welcome from relay");
    return this.state!;
  }

  async requestSnapshot(timeoutMs = 5000): Promise<JObject> {
    const before = this.lastSnapshot;
    this.send("snapshot", {});
    await this.waitFor(
      () => this.lastSnapshot !== before, timeoutMs, "no snapshot response");
    return this.lastSnapshot!;
  }

  // -- receiving ---------------------------------------------------------------

  private onData(data: unknown): void {
    let bytes: Uint8Array;
    if (data instanceof ArrayBuffer) {
      bytes = new Uint8Array(data);
    } else if (data instanceof Uint8Array) {
      bytes = data; // Buffer from the ws package
    } else {
      return; // text frames are not part of the protocol
    }
    let messages: Message[];
    try {
      messages = this.parser.feed(bytes);
    } catch (exc) {
      // The parser has already skipped the bad frame; the stream stays
      // usable.  Messages decoded earlier in this chunk are gone, which
      // matches the reference transport's behavior.
      if (exc instanceof ProtocolError && this.onProtocolError) {
        this.onProtocolError(exc);
        return;
      }
      throw exc;
    }
    if (this.autoDrain) {
      for (const msg of messages) {
        this.dispatch(msg);
      }
    } else {
      this.inbox.push(...messages);
    }
    this.checkWaiters();
  }

  /** Apply every queued message; returns how many were handled.  Call
   * once per render frame when autoDrain is off. */
  drain(): number {
    const batch = this.inbox;
    this.inbox = [];
    for (const msg of batch) {
      this.dispatch(msg);
    }
    if (batch.length > 0) {
      this.checkWaiters();
    }
    return batch.length;
  }

  private dispatch(msg: Message): void {
    this.lastTick = Math.max(this.lastTick, msg.tick);
    if (msg.kind === "welcome") {
      this.state = SessionState.fromDict(msg.payload["state"] as JObject);
      for (const queued of this.backlog) {
        if (queued.seq > this.state.seq) {
          applyEvent(this.state, queued);
        }
      }
      this.backlog = [];
    } else if (msg.kind === "nack") {
      this.nacks.push(msg);
      this.settlePending(msg.payload["of_kind"] as string);
      if (this.onNack) this.onNack(msg);
    } else if (msg.kind === "snapshot") {
      this.lastSnapshot = msg.payload["state"] as JObject;
    } else if (isEventKind(msg.kind)) {
      if (this.state === null) {
        this.backlog.push(msg);
      } else if (msg.seq > this.state.seq) {
        applyEvent(this.state, msg);
      }
      if (msg.sender === this.avatarId) {
        this.settlePending(msg.kind);
      }
    }
    if (this.onUpdate) this.onUpdate(msg);
  }

  private backlog: Message[] = []; // events seen before the welcome

  private settlePending(kind: string): void {
    const i = this.pending.indexOf(kind);
    if (i >= 0) {
      this.pending.splice(i, 1);
    }
  }

  // -- waiting ---------------------------------------------------------------

  waitFor(predicate: () => boolean, timeoutMs: number, what = "condition"): Promise<void> {
    if (predicate()) {
      return Promise.resolve();
    }
    if (this.closed) {
      return Promise.reject(new SessionError(`connection closed while waiting: ${what}`));
    }
    return new Promise<void>((resolve, reject) => {
      const waiter: Waiter = {
        predicate,
        resolve,
        reject,
        what,
        timer: setTimeout(() => {
          this.waiters = this.waiters.filter((w) => w !== waiter);
          reject(new SessionError(`timed out waiting: ${what}`));
        }, timeoutMs),
      };
      this.waiters.push(waiter);
    });
  }

  private checkWaiters(): void {
    const still: Waiter[] = [];
    for (const w of this.waiters) {
      if (w.predicate()) {
        clearTimeout(w.timer);
        w.resolve();
      } else {
        still.push(w);
      }
    }
    this.waiters = still;
  }

  private failWaiters(err: Error): void {
    for (const w of this.waiters) {
      clearTimeout(w.timer);
      w.reject(new SessionError(`${err.message}: ${w.what}`));
    }
    this.waiters = [];
  }

  // -- convenience ---------------------------------------------------------------

  stateHash(): string {
    if (this.state === null) {
      throw new SessionError("no state yet (join first)");
    }
    return this.state.contentHash();
  }

  close(polite = true): void {
    if (this.closed) {
      return;
    }
    if (polite && this.connected) {
      try {
        this.send("goodbye", {});
      } catch {
        // best effort
      }
    }
    this.closed = true;
    this.connected = false;
    this.failWaiters(new SessionError("session closed"));
    this.socket.close();
  }
}
