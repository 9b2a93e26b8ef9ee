/**
 * Wire codec: framing, schema validation, resynchronization after a bad
 * frame, and byte-for-byte agreement with the reference encoder in both
 * directions.
 */

import { describe, expect, it } from "vitest";
import { JObject, real } from "../src/canonical.js";
import {
  FrameParser,
  MalformedFrame,
  Message,
  ProtocolError,
  SchemaViolation,
  UnknownKind,
  decodeFrame,
  encodeFrame,
  makeMessage,
  validateMessage,
} from "../src/frames.js";
import { IDENTITY_FRAME, Pose, Vec3 } from "../src/geometry.js";
import { bytesToHex, hexToBytes, py } from "./helpers.js";

function poseDict(x: number, y: number, z: number): JObject {
  return new Pose(new Vec3(x, y, z), IDENTITY_FRAME).toDict();
}

/** One representative valid message per kind. */
function sampleMessages(): Message[] {
  const pose = poseDict(0.25, 1.6, -0.75);
  return [
    makeMessage("hello", "alice", { name: "Alice" }, 0, 0),
    makeMessage("welcome", "relay", {
      state: { seq: 3, boards: [], avatars: {} },
    }, 3, 1),
    makeMessage("avatar_update", "alice", {
      head: pose, left: poseDict(-0.2, 1.1, -0.4), right: poseDict(0.2, 1.1, -0.4),
    }, 4, 2),
    makeMessage("stroke_begin", "alice", {
      board: "b0", color: [real(0.1), real(0.5), real(0.9)], width: real(0.012),
    }, 5, 2),
    makeMessage("stroke_points", "alice", {
      board: "b0",
      points: [
        [real(0.0), real(0.0), real(0.0)],
        [real(0.1), real(0.30000000000000004), real(-0.0)],
        [real(1e-9), real(1e16), real(5e-324)],
      ],
    }, 6, 3),
    makeMessage("stroke_end", "alice", { board: "b0" }, 7, 3),
    makeMessage("sketch_op", "alice", {
      op: "select",
      ray: { origin: [real(0), real(1.5), real(0)], dir: [real(0), real(0), real(1)] },
    }, 8, 4),
    makeMessage("sketch_op", "alice", {
      op: "choose", slot: "rotate", hand: pose,
    }, 9, 4),
    makeMessage("sketch_op", "alice", { op: "update", hand: pose }, 10, 5),
    makeMessage("sketch_op", "alice", { op: "commit" }, 11, 5),
    makeMessage("sketch_op", "alice", {
      op: "spawn", board: "b0", shape: "cube",
      center: [real(0), real(0), real(0.1)],
      size: [real(0.3), real(0.2), real(0.3)],
      color: [real(1), real(0), real(0)],
    }, 12, 6),
    makeMessage("draw_request", "bob", { board: "b1" }, 13, 6),
    makeMessage("draw_grant", "relay", { board: "b1", holder: "bob" }, 14, 7),
    makeMessage("draw_release", "bob", { board: "b1" }, 15, 7),
    makeMessage("config_switch", "alice", { config: "eyes_free" }, 16, 8),
    makeMessage("telepathy_set", "alice", {
      observee: "bob", mode: "immersive_third",
    }, 17, 8),
    makeMessage("telepathy_set", "alice", {
      observee: null, mode: "windowed",
    }, 18, 9),
    makeMessage("snapshot", "alice", {}, 0, 0),
    makeMessage("snapshot", "relay", { state: { seq: 18 } }, 18, 9),
    makeMessage("heartbeat", "bob", {}, 0, 0),
    makeMessage("goodbye", "bob", {}, 19, 9),
    makeMessage("nack", "relay", {
      code: "no_lock", detail: "alice does not hold the draw token for b0",
      of_kind: "stroke_begin",
    }, 0, 10),
  ];
}

describe("frame round trip", () => {
  it("encodes and decodes every message kind", () => {
    for (const msg of sampleMessages()) {
      const frame = encodeFrame(msg);
      const got = decodeFrame(frame, 0);
      expect(got).not.toBeNull();
      expect(got!.used).toBe(frame.length);
      expect(encodeFrame(got!.message)).toEqual(frame);
    }
  });

  it("prefix is 4-byte little-endian length", () => {
    const frame = encodeFrame(makeMessage("heartbeat", "x"));
    const body = frame.length - 4;
    expect(frame[0]).toBe(body & 0xff);
    expect(frame[1]).toBe((body >> 8) & 0xff);
    expect(frame[2]).toBe(0);
    expect(frame[3]).toBe(0);
  });

  it("returns null on a partial frame", () => {
    const frame = encodeFrame(makeMessage("heartbeat", "x"));
    for (const cut of [0, 1, 3, 4, frame.length - 1]) {
      expect(decodeFrame(frame.slice(0, cut), 0)).toBeNull();
    }
  });
});

describe("stream re-segmentation", () => {
  it("delivers identical messages regardless of chunking", () => {
    const msgs = sampleMessages();
    const whole = new Uint8Array(
      msgs.map((m) => encodeFrame(m)).reduce((acc: number[], f) => {
        acc.push(...f);
        return acc;
      }, []));
    for (const chunkSize of [1, 2, 7, 64, whole.length]) {
      const parser = new FrameParser();
      const got: Message[] = [];
      for (let i = 0; i < whole.length; i += chunkSize) {
        got.push(...parser.feed(whole.slice(i, i + chunkSize)));
      }
      expect(got.length).toBe(msgs.length);
      got.forEach((m, i) => {
        expect(encodeFrame(m)).toEqual(encodeFrame(msgs[i]));
      });
      expect(parser.pendingBytes()).toBe(0);
    }
  });

  it("skips a malformed frame and resumes on the next one", () => {
    const good = encodeFrame(makeMessage("heartbeat", "x"));
    const badBody = new TextEncoder().encode('{"kind":"bogus_kind"}');
    const bad = new Uint8Array(4 + badBody.length);
    new DataView(bad.buffer).setUint32(0, badBody.length, true);
    bad.set(badBody, 4);
    const parser = new FrameParser();
    const first = parser.feed(good);
    expect(first.length).toBe(1);
    let err: ProtocolError | null = null;
    try {
      parser.feed(bad);
    } catch (e) {
      err = e as ProtocolError;
    }
    expect(err).not.toBeNull();
    expect(err!.offset).toBe(good.length);
    const after = parser.feed(good);
    expect(after.length).toBe(1);
    expect(after[0].kind).toBe("heartbeat");
  });
});

describe("schema validation", () => {
  it("rejects unknown kinds, bad fields, and float seq/tick", () => {
    expect(() => validateMessage(makeMessage("warp", "x"))).toThrow(UnknownKind);
    expect(() => validateMessage(makeMessage("hello", "x", {}))).toThrow(
      SchemaViolation);
    expect(() =>
      validateMessage(makeMessage("stroke_begin", "x", {
        board: "b0", color: [real(0), real(0), real(2)], width: real(0.01),
      }))).not.toThrow(); // color range is session policy, not schema
    expect(() =>
      validateMessage(makeMessage("stroke_begin", "x", {
        board: "b0", color: [real(0), real(0)], width: real(0.01),
      }))).toThrow(SchemaViolation);
    expect(() =>
      validateMessage(makeMessage("stroke_begin", "x", {
        board: "b0", color: [real(0), real(0), real(1)], width: real(0),
      }))).toThrow(SchemaViolation);
    const floatSeq = makeMessage("heartbeat", "x");
    (floatSeq as { seq: unknown }).seq = real(1);
    expect(() => validateMessage(floatSeq as Message)).toThrow(SchemaViolation);
    const negTick = makeMessage("heartbeat", "x", {}, 0, -1);
    expect(() => validateMessage(negTick)).toThrow(SchemaViolation);
  });

  it("rejects oversized and non-object frames", () => {
    const huge = new Uint8Array(4);
    new DataView(huge.buffer).setUint32(0, 0x7fffffff, true);
    expect(() => decodeFrame(huge, 0)).toThrow(MalformedFrame);
    const arr = new TextEncoder().encode("[1,2,3]");
    const framed = new Uint8Array(4 + arr.length);
    new DataView(framed.buffer).setUint32(0, arr.length, true);
    framed.set(arr, 4);
    expect(() => decodeFrame(framed, 0)).toThrow(MalformedFrame);
  });
});

describe("cross-language byte equality", () => {
  it("reference decodes ours and re-encodes the identical bytes", () => {
    const msgs = sampleMessages();
    const hexes = msgs.map((m) => bytesToHex(encodeFrame(m)));
    const script = `
import sys
from collabboard.protocol import decode, encode
for line in sys.stdin.read().split():
    msg, used = decode(bytes.fromhex(line), 0)
    print(encode(msg).hex())
`;
    const back = py(script, hexes.join("\n")).trimEnd().split("\n");
    expect(back).toEqual(hexes);
  });

  it("we decode reference frames and re-encode the identical bytes", () => {
    const script = `
from collabboard.protocol import Message, encode
from collabboard.model import new_session
msgs = [
    Message(kind="hello", sender="z\\u00e9", payload={"name": "Z\\u00e9 \\U0001F58B"}),
    Message(kind="welcome", sender="relay",
            payload={"state": new_session(3, "mirrored", 30).to_dict()},
            seq=0, tick=0),
    Message(kind="stroke_points", sender="a",
            payload={"board": "b0",
                     "points": [[0.1, 0.2, 0.30000000000000004],
                                [-0.0, 1e16, 5e-324]]},
            seq=2, tick=1),
    Message(kind="nack", sender="relay",
            payload={"code": "x", "detail": "d \\u2014 e", "of_kind": "hello"}),
]
for m in msgs:
    print(encode(m).hex())
`;
    for (const hex of py(script).trimEnd().split("\n")) {
      const bytes = hexToBytes(hex);
      const got = decodeFrame(bytes, 0);
      expect(got).not.toBeNull();
      expect(got!.used).toBe(bytes.length);
      expect(bytesToHex(encodeFrame(got!.message))).toBe(hex);
    }
  });
});
