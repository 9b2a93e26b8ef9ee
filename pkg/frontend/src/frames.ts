/**
 * Wire codec: canonical JSON messages in length-prefixed frames.
 *
 * Frame layout: 4-byte little-endian unsigned payload length, then one
 * canonical-JSON object as UTF-8.  The same bytes travel over raw TCP
 * and as binary WebSocket message payloads, so this client and native
 * clients interoperate frame-for-frame.
 */

import {
  JObject,
  JValue,
  Real,
  canonicalBytes,
  parseTaggedJson,
} from "./canonical.js";

export const LENGTH_PREFIX_SIZE = 4;
export const MAX_FRAME_BYTES = 16 * 1024 * 1024;

export class ProtocolError extends Error {
  constructor(msg: string, public offset = 0) {
    super(`${msg} (at byte ${offset})`);
  }
}

export class MalformedFrame extends ProtocolError {}
export class UnknownKind extends ProtocolError {}
export class SchemaViolation extends ProtocolError {}

export interface Message {
  kind: string;
  sender: string;
  payload: JObject;
  seq: number;
  tick: number;
}

export function makeMessage(
  kind: string, sender: string, payload: JObject = {}, seq = 0, tick = 0,
): Message {
  return { kind, sender, payload, seq, tick };
}

// ---------------------------------------------------------------------------
// Payload schemas
// ---------------------------------------------------------------------------

export const SKETCH_OPS = ["select", "choose", "update", "commit", "spawn"] as const;
export const PIE_SLOTS = ["delete", "move_away", "copy", "scale", "rotate", "move"] as const;
export const PRIMITIVE_SHAPES = ["cube", "sphere", "cylinder"] as const;
export const CONFIG_KINDS = ["side_by_side", "mirrored", "eyes_free"] as const;
export const TELEPATHY_MODES = ["windowed", "immersive_first", "immersive_third"] as const;

export type PieSlot = (typeof PIE_SLOTS)[number];
export type ConfigKind = (typeof CONFIG_KINDS)[number];
export type TelepathyMode = (typeof TELEPATHY_MODES)[number];

function isNum(v: JValue | undefined): boolean {
  if (v instanceof Real) return Number.isFinite(v.v);
  return typeof v === "number" && Number.isFinite(v);
}

function numOf(v: JValue): number {
  return v instanceof Real ? v.v : (v as number);
}

function isVec(v: JValue | undefined): boolean {
  return Array.isArray(v) && v.length === 3 && v.every((c) => isNum(c));
}

function isDict(v: JValue | undefined): v is JObject {
  return typeof v === "object" && v !== null && !Array.isArray(v) && !(v instanceof Real);
}

function isPose(v: JValue | undefined): boolean {
  return isDict(v) && ["pos", "right", "up", "fwd"].every((k) => isVec(v[k]));
}

function isStr(v: JValue | undefined): v is string {
  return typeof v === "string";
}

function req(
  payload: JObject, key: string,
  pred: (v: JValue | undefined) => boolean, what: string,
): void {
  if (!(key in payload) || !pred(payload[key])) {
    throw new SchemaViolation(`payload field '${key}' missing or not a ${what}`);
  }
}

type Checker = (p: JObject) => void;

const SCHEMAS: Record<string, Checker> = {
  hello: (p) => req(p, "name", isStr, "string"),
  welcome: (p) => req(p, "state", isDict, "object"),
  avatar_update: (p) => {
    for (const k of ["head", "left", "right"]) req(p, k, isPose, "pose");
  },
  stroke_begin: (p) => {
    req(p, "board", isStr, "string");
    req(p, "color", isVec, "rgb triple");
    req(p, "width", (v) => isNum(v) && numOf(v!) > 0, "positive number");
  },
  stroke_points: (p) => {
    req(p, "board", isStr, "string");
    req(p, "points",
        (v) => Array.isArray(v) && v.length >= 1 && v.every((q) => isVec(q)),
        "point list");
  },
  stroke_end: (p) => req(p, "board", isStr, "string"),
  sketch_op: (p) => {
    req(p, "op", (v) => isStr(v) && (SKETCH_OPS as readonly string[]).includes(v),
        `one of ${SKETCH_OPS.join(", ")}`);
    const op = p["op"] as string;
    if (op === "select") {
      req(p, "ray", (v) => isDict(v) && isVec(v["origin"]) && isVec(v["dir"]), "ray");
    } else if (op === "choose") {
      req(p, "slot", (v) => isStr(v) && (PIE_SLOTS as readonly string[]).includes(v),
          `one of ${PIE_SLOTS.join(", ")}`);
      req(p, "hand", isPose, "pose");
    } else if (op === "update") {
      req(p, "hand", isPose, "pose");
    } else if (op === "spawn") {
      req(p, "board", isStr, "string");
      req(p, "shape",
          (v) => isStr(v) && (PRIMITIVE_SHAPES as readonly string[]).includes(v),
          `one of ${PRIMITIVE_SHAPES.join(", ")}`);
      req(p, "center", isVec, "vec3");
      req(p, "size", (v) => isVec(v) && (v as JValue[]).every((c) => numOf(c) > 0),
          "positive vec3");
      req(p, "color", isVec, "rgb triple");
    }
  },
  draw_request: (p) => req(p, "board", isStr, "string"),
  draw_grant: (p) => {
    req(p, "board", isStr, "string");
    req(p, "holder", isStr, "string");
  },
  draw_release: (p) => req(p, "board", isStr, "string"),
  config_switch: (p) =>
    req(p, "config", (v) => isStr(v) && (CONFIG_KINDS as readonly string[]).includes(v),
        `one of ${CONFIG_KINDS.join(", ")}`),
  telepathy_set: (p) => {
    req(p, "observee", (v) => v === null || isStr(v), "string or null");
    req(p, "mode",
        (v) => isStr(v) && (TELEPATHY_MODES as readonly string[]).includes(v),
        `one of ${TELEPATHY_MODES.join(", ")}`);
  },
  snapshot: (p) => {
    if ("state" in p && !isDict(p["state"])) {
      throw new SchemaViolation("snapshot state must be an object");
    }
  },
  heartbeat: () => {},
  goodbye: () => {},
  nack: (p) => {
    req(p, "code", isStr, "string");
    req(p, "detail", isStr, "string");
    req(p, "of_kind", isStr, "string");
  },
};

export const MESSAGE_KINDS = Object.keys(SCHEMAS).sort();

export function validateMessage(m: Message): void {
  if (!(m.kind in SCHEMAS)) {
    throw new UnknownKind(`unknown kind '${m.kind}'`);
  }
  if (typeof m.sender !== "string") {
    throw new SchemaViolation("sender must be a string");
  }
  if (!Number.isSafeInteger(m.seq) || m.seq < 0) {
    throw new SchemaViolation("seq must be a non-negative integer");
  }
  if (!Number.isSafeInteger(m.tick) || m.tick < 0) {
    throw new SchemaViolation("tick must be a non-negative integer");
  }
  if (!isDict(m.payload)) {
    throw new SchemaViolation("payload must be an object");
  }
  SCHEMAS[m.kind](m.payload);
}

// ---------------------------------------------------------------------------
// Codec
// ---------------------------------------------------------------------------

/** Encode one message as a wire frame; equal messages yield equal bytes. */
export function encodeFrame(m: Message): Uint8Array {
  validateMessage(m);
  const body = canonicalBytes({
    kind: m.kind,
    payload: m.payload,
    sender: m.sender,
    seq: m.seq,
    tick: m.tick,
  });
  const frame = new Uint8Array(LENGTH_PREFIX_SIZE + body.length);
  new DataView(frame.buffer).setUint32(0, body.length, true);
  frame.set(body, LENGTH_PREFIX_SIZE);
  return frame;
}

const UTF8_DECODER = new TextDecoder("utf-8", { fatal: true });

export interface Decoded {
  message: Message;
  used: number;
}

/**
 * Decode one frame from `buf` at `offset`.  Returns null when the buffer
 * does not yet hold a complete frame; throws a ProtocolError subclass
 * (carrying the offset) on bad frames.  Inbound number tokens keep their
 * int/float identity so re-encoding reproduces the original bytes.
 */
export function decodeFrame(buf: Uint8Array, offset = 0): Decoded | null {
  const avail = buf.length - offset;
  if (avail < LENGTH_PREFIX_SIZE) return null;
  const length = new DataView(buf.buffer, buf.byteOffset + offset, 4).getUint32(0, true);
  if (length > MAX_FRAME_BYTES) {
    throw new MalformedFrame(`frame length ${length} exceeds limit`, offset);
  }
  if (avail < LENGTH_PREFIX_SIZE + length) return null;
  const start = offset + LENGTH_PREFIX_SIZE;
  let obj: JValue;
  try {
    obj = parseTaggedJson(UTF8_DECODER.decode(buf.subarray(start, start + length)));
  } catch (exc) {
    throw new MalformedFrame(`payload is not valid JSON: ${exc}`, offset);
  }
  if (!isDict(obj)) {
    throw new MalformedFrame("frame payload must be a JSON object", offset);
  }
  for (const key of ["kind", "sender", "seq", "tick", "payload"]) {
    if (!(key in obj)) {
      throw new SchemaViolation(`missing frame field '${key}'`, offset);
    }
  }
  const m: Message = {
    kind: obj["kind"] as string,
    sender: obj["sender"] as string,
    payload: obj["payload"] as JObject,
    seq: obj["seq"] as number,
    tick: obj["tick"] as number,
  };
  try {
    validateMessage(m);
  } catch (exc) {
    if (exc instanceof ProtocolError) exc.offset = offset;
    throw exc;
  }
  return { message: m, used: LENGTH_PREFIX_SIZE + length };
}

/** Re-segments an arbitrarily chunked byte stream into messages. */
export class FrameParser {
  private buf = new Uint8Array(0);
  private consumed = 0;

  feed(data: Uint8Array): Message[] {
    if (this.buf.length === 0) {
      this.buf = data.slice();
    } else {
      const joined = new Uint8Array(this.buf.length + data.length);
      joined.set(this.buf);
      joined.set(data, this.buf.length);
      this.buf = joined;
    }
    const out: Message[] = [];
    for (;;) {
      let decoded: Decoded | null;
      try {
        decoded = decodeFrame(this.buf, 0);
      } catch (exc) {
        if (exc instanceof ProtocolError) {
          // Skip the bad frame (its length prefix is still trusted), then
          // re-raise with the position in the overall stream.
          const length = new DataView(this.buf.buffer, this.buf.byteOffset, 4)
            .getUint32(0, true);
          const skip = Math.min(this.buf.length, LENGTH_PREFIX_SIZE + length);
          this.buf = this.buf.slice(skip);
          exc.offset = this.consumed;
          this.consumed += skip;
        }
        throw exc;
      }
      if (decoded === null) return out;
      this.buf = this.buf.slice(decoded.used);
      this.consumed += decoded.used;
      out.push(decoded.message);
    }
  }

  pendingBytes(): number {
    return this.buf.length;
  }
}
