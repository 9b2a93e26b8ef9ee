"""Wire protocol: canonical JSON messages in length-prefixed frames.

Frame layout: a 4-byte little-endian unsigned payload length, then the
payload — one canonical-JSON object encoded as UTF-8.  Canonical JSON
means keys sorted lexicographically, no insignificant whitespace, and
floats rendered as the shortest decimal that round-trips to the same
IEEE-754 double (CPython's ``repr``).  Encoding the same message value
therefore always yields identical bytes, which is what state hashing
and replica comparison lean on.

The codec is transport-agnostic: the same frames travel over plain TCP
and, verbatim, as binary WebSocket messages for browser clients.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

LENGTH_PREFIX = struct.Struct("<I")

# A frame larger than this is treated as malformed rather than buffered.
MAX_FRAME_BYTES = 16 * 1024 * 1024


class ProtocolError(ValueError):
    """Base for decode/encode failures.  ``offset`` is the byte offset of
    the offending frame within the stream fed so far."""

    def __init__(self, msg: str, offset: int = 0):
        super().__init__(f"{msg} (at byte {offset})")
        self.offset = offset


class MalformedFrame(ProtocolError):
    pass


class UnknownKind(ProtocolError):
    pass


class SchemaViolation(ProtocolError):
    pass


class NeedMoreBytes(Exception):
    """Raised by :func:`decode` when the buffer holds no complete frame."""


@dataclass
class Message:
    """One protocol unit.  ``seq`` and ``tick`` are relay-assigned
    (0 = unassigned); ``sender`` is the originating avatar id."""

    kind: str
    sender: str
    payload: dict = field(default_factory=dict)
    seq: int = 0
    tick: int = 0


# ---------------------------------------------------------------------------
# Payload schemas
# ---------------------------------------------------------------------------

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_vec(v) -> bool:
    return isinstance(v, list) and len(v) == 3 and all(_is_num(c) for c in v)


def _is_pose(v) -> bool:
    return (
        isinstance(v, dict)
        and all(k in v for k in ("pos", "right", "up", "fwd"))
        and all(_is_vec(v[k]) for k in ("pos", "right", "up", "fwd"))
    )


def _req(payload: dict, key: str, pred, what: str) -> None:
    if key not in payload or not pred(payload[key]):
        raise SchemaViolation(f"payload field {key!r} missing or not a {what}")


def _check_hello(p):
    _req(p, "name", lambda v: isinstance(v, str), "string")


def _check_state(p):
    _req(p, "state", lambda v: isinstance(v, dict), "object")


def _check_avatar_update(p):
    for k in ("head", "left", "right"):
        _req(p, k, _is_pose, "pose")


def _check_stroke_begin(p):
    _req(p, "board", lambda v: isinstance(v, str), "string")
    _req(p, "color", _is_vec, "rgb triple")
    _req(p, "width", lambda v: _is_num(v) and v > 0, "positive number")


def _check_stroke_points(p):
    _req(p, "board", lambda v: isinstance(v, str), "string")
    _req(p, "points", lambda v: isinstance(v, list) and len(v) >= 1
         and all(_is_vec(q) for q in v), "point list")


def _check_board_only(p):
    _req(p, "board", lambda v: isinstance(v, str), "string")


SKETCH_OPS = ("select", "choose", "update", "commit", "spawn")
PIE_SLOTS = ("delete", "move_away", "copy", "scale", "rotate", "move")
PRIMITIVE_SHAPES = ("cube", "sphere", "cylinder")
CONFIG_KINDS = ("side_by_side", "mirrored", "eyes_free")
TELEPATHY_MODES = ("windowed", "immersive_first", "immersive_third")


def _check_sketch_op(p):
    _req(p, "op", lambda v: v in SKETCH_OPS, f"one of {SKETCH_OPS}")
    op = p["op"]
    if op == "select":
        _req(p, "ray", lambda v: isinstance(v, dict) and _is_vec(v.get("origin"))
             and _is_vec(v.get("dir")), "ray")
    elif op == "choose":
        _req(p, "slot", lambda v: v in PIE_SLOTS, f"one of {PIE_SLOTS}")
        _req(p, "hand", _is_pose, "pose")
    elif op == "update":
        _req(p, "hand", _is_pose, "pose")
    elif op == "spawn":
        _req(p, "board", lambda v: isinstance(v, str), "string")
        _req(p, "shape", lambda v: v in PRIMITIVE_SHAPES, f"one of {PRIMITIVE_SHAPES}")
        _req(p, "center", _is_vec, "vec3")
        _req(p, "size", lambda v: _is_vec(v) and all(c > 0 for c in v), "positive vec3")
        _req(p, "color", _is_vec, "rgb triple")


def _check_draw_grant(p):
    _req(p, "board", lambda v: isinstance(v, str), "string")
    _req(p, "holder", lambda v: isinstance(v, str), "string")


def _check_config_switch(p):
    _req(p, "config", lambda v: v in CONFIG_KINDS, f"one of {CONFIG_KINDS}")


def _check_telepathy_set(p):
    _req(p, "observee", lambda v: v is None or isinstance(v, str), "string or null")
    _req(p, "mode", lambda v: v in TELEPATHY_MODES, f"one of {TELEPATHY_MODES}")


def _check_snapshot(p):
    # Empty payload = snapshot request; with "state" = snapshot response.
    if "state" in p and not isinstance(p["state"], dict):
        raise SchemaViolation("snapshot state must be an object")


def _check_nack(p):
    _req(p, "code", lambda v: isinstance(v, str), "string")
    _req(p, "detail", lambda v: isinstance(v, str), "string")
    _req(p, "of_kind", lambda v: isinstance(v, str), "string")


def _check_empty(p):
    pass


SCHEMAS = {
    "hello": _check_hello,
    "welcome": _check_state,
    "avatar_update": _check_avatar_update,
    "stroke_begin": _check_stroke_begin,
    "stroke_points": _check_stroke_points,
    "stroke_end": _check_board_only,
    "sketch_op": _check_sketch_op,
    "draw_request": _check_board_only,
    "draw_grant": _check_draw_grant,
    "draw_release": _check_board_only,
    "config_switch": _check_config_switch,
    "telepathy_set": _check_telepathy_set,
    "snapshot": _check_snapshot,
    "heartbeat": _check_empty,
    "goodbye": _check_empty,
    "nack": _check_nack,
}

MESSAGE_KINDS = tuple(sorted(SCHEMAS))


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

def canonical_json(obj) -> str:
    """Canonical JSON text: sorted keys, no whitespace, shortest floats."""
    try:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                          allow_nan=False, ensure_ascii=False)
    except ValueError as exc:
        raise ProtocolError(f"not canonically encodable: {exc}") from None


def canonical_bytes(obj) -> bytes:
    return canonical_json(obj).encode("utf-8")


def digest(obj) -> str:
    """sha256 hex digest of an object's canonical JSON form."""
    return hashlib.sha256(canonical_bytes(obj)).hexdigest()


# ---------------------------------------------------------------------------
# Codec
# ---------------------------------------------------------------------------

def validate_message(m: Message) -> None:
    if m.kind not in SCHEMAS:
        raise UnknownKind(f"unknown kind {m.kind!r}")
    if not isinstance(m.sender, str):
        raise SchemaViolation("sender must be a string")
    if not isinstance(m.seq, int) or isinstance(m.seq, bool) or m.seq < 0:
        raise SchemaViolation("seq must be a non-negative integer")
    if not isinstance(m.tick, int) or isinstance(m.tick, bool) or m.tick < 0:
        raise SchemaViolation("tick must be a non-negative integer")
    if not isinstance(m.payload, dict):
        raise SchemaViolation("payload must be an object")
    SCHEMAS[m.kind](m.payload)


def encode(m: Message) -> bytes:
    """Encode a message as one wire frame.  Deterministic: equal messages
    yield identical bytes.  Non-finite floats are rejected."""
    validate_message(m)
    body = canonical_bytes({
        "kind": m.kind,
        "payload": m.payload,
        "sender": m.sender,
        "seq": m.seq,
        "tick": m.tick,
    })
    return LENGTH_PREFIX.pack(len(body)) + body


def decode(buf: bytes, offset: int = 0) -> tuple:
    """Decode one frame from ``buf[offset:]``.

    Returns ``(message, bytes_consumed)``.  Raises :class:`NeedMoreBytes`
    when the buffer does not yet hold a complete frame, and a
    :class:`ProtocolError` subclass (with byte offset) on bad frames.
    """
    avail = len(buf) - offset
    if avail < LENGTH_PREFIX.size:
        raise NeedMoreBytes
    (length,) = LENGTH_PREFIX.unpack_from(buf, offset)
    if length > MAX_FRAME_BYTES:
        raise MalformedFrame(f"frame length {length} exceeds limit", offset)
    if avail < LENGTH_PREFIX.size + length:
        raise NeedMoreBytes
    start = offset + LENGTH_PREFIX.size
    body = buf[start:start + length]
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFrame(f"payload is not valid JSON: {exc}", offset) from None
    if not isinstance(obj, dict):
        raise MalformedFrame("frame payload must be a JSON object", offset)
    for key in ("kind", "sender", "seq", "tick", "payload"):
        if key not in obj:
            raise SchemaViolation(f"missing frame field {key!r}", offset)
    m = Message(kind=obj["kind"], sender=obj["sender"], payload=obj["payload"],
                seq=obj["seq"], tick=obj["tick"])
    try:
        validate_message(m)
    except ProtocolError as exc:
        exc.offset = offset
        raise
    return m, LENGTH_PREFIX.size + length


class FrameStream:
    """Re-segments an arbitrarily chunked byte stream into messages.

    One instance per connection.  ``feed`` returns every complete message
    and buffers the tail; a malformed frame is consumed (its length
    prefix is still trusted) and reported, so the stream stays usable.
    """

    def __init__(self):
        self._buf = bytearray()
        self._consumed = 0  # bytes consumed since connection start

    def feed(self, data: bytes) -> List[Message]:
        self._buf.extend(data)
        out: List[Message] = []
        while True:
            try:
                msg, used = decode(bytes(self._buf), 0)
            except NeedMoreBytes:
                return out
            except ProtocolError as exc:
                # Skip the bad frame, then re-raise with the stream offset.
                (length,) = LENGTH_PREFIX.unpack_from(self._buf, 0)
                skip = min(len(self._buf), LENGTH_PREFIX.size + length)
                del self._buf[:skip]
                exc.offset = self._consumed
                self._consumed += skip
                raise
            del self._buf[:used]
            self._consumed += used
            out.append(msg)

    def pending_bytes(self) -> int:
        return len(self._buf)


def iter_frames(data: bytes) -> Iterator[Message]:
    """Decode a complete byte string of concatenated frames."""
    offset = 0
    while offset < len(data):
        msg, used = decode(data, offset)
        offset += used
        yield msg
