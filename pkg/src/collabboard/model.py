"""Authoritative session data model and event reducer.

Everything a session contains — avatars, boards, strokes, manipulable
sketches, draw tokens, telepathy links, selections — lives in
:class:`SessionState`.  State changes happen exclusively through
:func:`apply_event`, a deterministic reducer over relay-sequenced
messages: the relay and every client replica run the same reducer on
the same ordered event list and therefore converge bit-for-bit (state
hashes are compared over canonical JSON).

Sketch content is stored in the local frame of its owning (vertical)
board.  Each sketch carries a transform — translation, yaw about the
board-local +y axis through a fixed pivot, uniform scale — applied on
top of the raw content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from . import geometry as geo
from .geometry import Frame, Plane, Pose, Ray, Vec3
from .protocol import CONFIG_KINDS, Message, PIE_SLOTS, PRIMITIVE_SHAPES, TELEPATHY_MODES, digest

# Selection: world-space sketch AABBs are inflated by this before ray tests.
PICK_INFLATE = 0.01
# Stroke grouping: a stroke ended within this time and distance of an
# existing sketch merges into it instead of starting a new sketch.
MERGE_WINDOW_S = 1.0
MERGE_DIST = 0.10
# Gesture scale factors are clamped to this range.
SCALE_CLAMP = (0.01, 100.0)
# A gaze candidate must win this many consecutive evaluations to take over.
GAZE_STICKY_EVALS = 10

EVENT_KINDS = (
    "hello", "goodbye", "avatar_update",
    "stroke_begin", "stroke_points", "stroke_end",
    "sketch_op", "draw_request", "draw_grant", "draw_release",
    "config_switch", "telepathy_set",
)


class Rejection(Exception):
    """An event that is invalid against the current state.  The relay
    turns these into Nacks; state is left untouched."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


# ---------------------------------------------------------------------------
# Content types
# ---------------------------------------------------------------------------

@dataclass
class Stroke:
    id: str
    points: List[Vec3]
    color: Tuple[float, float, float]
    width: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "points": [p.to_list() for p in self.points],
            "color": [float(c) for c in self.color],
            "width": float(self.width),
        }

    @staticmethod
    def from_dict(d: dict) -> "Stroke":
        return Stroke(
            id=d["id"],
            points=[Vec3.from_list(p) for p in d["points"]],
            color=(float(d["color"][0]), float(d["color"][1]), float(d["color"][2])),
            width=float(d["width"]),
        )


@dataclass
class Primitive:
    shape: str  # cube | sphere | cylinder
    center: Vec3
    size: Vec3  # full extents; sphere uses size.x as diameter
    color: Tuple[float, float, float]

    def corner_points(self) -> List[Vec3]:
        """Content-space points whose transformed hull bounds the shape
        (exact for cubes; spheres/cylinders get analytic extents)."""
        c, s = self.center, self.size
        hx, hy, hz = s.x / 2.0, s.y / 2.0, s.z / 2.0
        return [
            Vec3(c.x + dx, c.y + dy, c.z + dz)
            for dx in (-hx, hx) for dy in (-hy, hy) for dz in (-hz, hz)
        ]

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "center": self.center.to_list(),
            "size": self.size.to_list(),
            "color": [float(c) for c in self.color],
        }

    @staticmethod
    def from_dict(d: dict) -> "Primitive":
        return Primitive(
            shape=d["shape"],
            center=Vec3.from_list(d["center"]),
            size=Vec3.from_list(d["size"]),
            color=(float(d["color"][0]), float(d["color"][1]), float(d["color"][2])),
        )


@dataclass
class Sketch3D:
    """A manipulable group of strokes and primitives.

    ``translation``/``rotation``/``scale`` map content space to
    board-local space: q = pivot + translation + Ry(rotation) * (scale * (p - pivot)).
    The pivot is frozen at creation so later merges do not shift placement.
    """

    id: str
    board_id: str
    strokes: List[Stroke] = field(default_factory=list)
    primitives: List[Primitive] = field(default_factory=list)
    translation: Vec3 = geo.ZERO
    rotation: float = 0.0
    scale: float = 1.0
    pivot: Vec3 = geo.ZERO
    last_tick: int = 0

    def is_empty(self) -> bool:
        return not self.strokes and not self.primitives

    def transform_point(self, p: Vec3) -> Vec3:
        return geo.apply_sketch_transform(p, self.pivot, self.translation,
                                          self.rotation, self.scale)

    def untransform_point(self, q: Vec3) -> Vec3:
        return geo.invert_sketch_transform(q, self.pivot, self.translation,
                                           self.rotation, self.scale)

    def local_bbox(self) -> Tuple[Vec3, Vec3]:
        """Board-local AABB of the transformed content."""
        if self.is_empty():
            raise Rejection("empty_sketch", f"sketch {self.id} has no content")
        lo = [math.inf] * 3
        hi = [-math.inf] * 3
        for q in self._transformed_hull_points():
            for i, c in enumerate(q):
                if c < lo[i]:
                    lo[i] = c
                if c > hi[i]:
                    hi[i] = c
        for prim, c_t, r_t, hh_t in self._round_prims():
            ext = (r_t, hh_t if prim.shape == "cylinder" else r_t, r_t)
            for i in range(3):
                if c_t[i] - ext[i] < lo[i]:
                    lo[i] = c_t[i] - ext[i]
                if c_t[i] + ext[i] > hi[i]:
                    hi[i] = c_t[i] + ext[i]
        return Vec3(*lo), Vec3(*hi)

    def world_bbox(self, board_pose: Pose) -> Tuple[Vec3, Vec3]:
        """World-space AABB: exact min/max over all transformed content."""
        if self.is_empty():
            raise Rejection("empty_sketch", f"sketch {self.id} has no content")
        lo = [math.inf] * 3
        hi = [-math.inf] * 3
        for q in self._transformed_hull_points():
            w = geo.local_to_world(board_pose, q)
            for i, c in enumerate(w):
                if c < lo[i]:
                    lo[i] = c
                if c > hi[i]:
                    hi[i] = c
        for prim, c_t, r_t, hh_t in self._round_prims():
            cw = geo.local_to_world(board_pose, c_t)
            if prim.shape == "sphere":
                ext = (r_t, r_t, r_t)
            else:
                # Cylinder axis is board-local +y; exact AABB of a tilted cylinder.
                a = board_pose.frame.up
                ext = tuple(
                    hh_t * abs(a[i]) + r_t * math.sqrt(max(0.0, 1.0 - a[i] * a[i]))
                    for i in range(3)
                )
            for i in range(3):
                if cw[i] - ext[i] < lo[i]:
                    lo[i] = cw[i] - ext[i]
                if cw[i] + ext[i] > hi[i]:
                    hi[i] = cw[i] + ext[i]
        return Vec3(*lo), Vec3(*hi)

    def _transformed_hull_points(self):
        for stroke in self.strokes:
            for p in stroke.points:
                yield self.transform_point(p)
        for prim in self.primitives:
            if prim.shape == "cube":
                for p in prim.corner_points():
                    yield self.transform_point(p)

    def _round_prims(self):
        """(prim, transformed center, scaled radius, scaled half-height)
        for the rotation-invariant shapes."""
        for prim in self.primitives:
            if prim.shape in ("sphere", "cylinder"):
                c_t = self.transform_point(prim.center)
                r_t = (prim.size.x / 2.0) * self.scale
                hh_t = (prim.size.y / 2.0) * self.scale
                yield prim, c_t, r_t, hh_t

    def deep_copy(self, new_id: str) -> "Sketch3D":
        return Sketch3D(
            id=new_id,
            board_id=self.board_id,
            strokes=[Stroke(id=f"{new_id}_s{i}", points=list(s.points),
                            color=s.color, width=s.width)
                     for i, s in enumerate(self.strokes)],
            primitives=[replace(p) for p in self.primitives],
            translation=self.translation,
            rotation=self.rotation,
            scale=self.scale,
            pivot=self.pivot,
            last_tick=self.last_tick,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "board": self.board_id,
            "strokes": [s.to_dict() for s in self.strokes],
            "prims": [p.to_dict() for p in self.primitives],
            "trans": self.translation.to_list(),
            "rot": float(self.rotation),
            "scale": float(self.scale),
            "pivot": self.pivot.to_list(),
            "last_tick": self.last_tick,
        }

    @staticmethod
    def from_dict(d: dict) -> "Sketch3D":
        return Sketch3D(
            id=d["id"],
            board_id=d["board"],
            strokes=[Stroke.from_dict(s) for s in d["strokes"]],
            primitives=[Primitive.from_dict(p) for p in d["prims"]],
            translation=Vec3.from_list(d["trans"]),
            rotation=float(d["rot"]),
            scale=float(d["scale"]),
            pivot=Vec3.from_list(d["pivot"]),
            last_tick=int(d["last_tick"]),
        )


@dataclass
class Board:
    """A planar content surface.  Local frame: right = +x (u), up = +y (v),
    outward normal = +z.  Vertical boards are shared; horizontal boards are
    private per-owner drawing surfaces for the eyes-free configuration."""

    id: str
    pose: Pose
    width: float
    height: float
    kind: str = "vertical"  # vertical | horizontal
    owner: Optional[str] = None
    sketches: List[Sketch3D] = field(default_factory=list)

    def plane(self) -> Plane:
        return Plane(self.pose.position, self.pose.frame.forward)

    def center(self) -> Vec3:
        return self.pose.position

    def contains_local(self, p: Vec3) -> bool:
        return abs(p.x) <= self.width / 2.0 and abs(p.y) <= self.height / 2.0

    def sketch(self, sketch_id: str) -> Optional[Sketch3D]:
        for s in self.sketches:
            if s.id == sketch_id:
                return s
        return None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "pose": self.pose.to_dict(),
            "w": float(self.width),
            "h": float(self.height),
            "kind": self.kind,
            "owner": self.owner,
            "sketches": [s.to_dict() for s in self.sketches],
        }

    @staticmethod
    def from_dict(d: dict) -> "Board":
        return Board(
            id=d["id"],
            pose=Pose.from_dict(d["pose"]),
            width=float(d["w"]),
            height=float(d["h"]),
            kind=d["kind"],
            owner=d["owner"],
            sketches=[Sketch3D.from_dict(s) for s in d["sketches"]],
        )


@dataclass
class Avatar:
    id: str
    name: str
    head: Pose
    left_hand: Pose
    right_hand: Pose
    # Gaze-board tracking with hysteresis, updated on every avatar_update.
    gaze_board: Optional[str] = None
    gaze_cand: Optional[str] = None
    gaze_count: int = 0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "head": self.head.to_dict(),
            "left": self.left_hand.to_dict(),
            "right": self.right_hand.to_dict(),
            "gaze": self.gaze_board,
            "gaze_cand": self.gaze_cand,
            "gaze_n": self.gaze_count,
        }

    @staticmethod
    def from_dict(d: dict) -> "Avatar":
        return Avatar(
            id=d["id"],
            name=d["name"],
            head=Pose.from_dict(d["head"]),
            left_hand=Pose.from_dict(d["left"]),
            right_hand=Pose.from_dict(d["right"]),
            gaze_board=d["gaze"],
            gaze_cand=d["gaze_cand"],
            gaze_count=int(d["gaze_n"]),
        )


@dataclass
class DrawToken:
    holder: Optional[str] = None
    queue: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"holder": self.holder, "queue": list(self.queue)}

    @staticmethod
    def from_dict(d: dict) -> "DrawToken":
        return DrawToken(holder=d["holder"], queue=list(d["queue"]))


@dataclass
class OpenStroke:
    id: str
    board_id: str
    author: str
    color: Tuple[float, float, float]
    width: float
    points: List[Vec3] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "board": self.board_id,
            "author": self.author,
            "color": [float(c) for c in self.color],
            "width": float(self.width),
            "points": [p.to_list() for p in self.points],
        }

    @staticmethod
    def from_dict(d: dict) -> "OpenStroke":
        return OpenStroke(
            id=d["id"],
            board_id=d["board"],
            author=d["author"],
            color=(float(d["color"][0]), float(d["color"][1]), float(d["color"][2])),
            width=float(d["width"]),
            points=[Vec3.from_list(p) for p in d["points"]],
        )


@dataclass
class Selection:
    """Pie-menu state for one avatar: idle, selected (menu open), or an
    operation in flight.  Gesture anchors are stored in board-local
    coordinates of the sketch's board."""

    mode: str = "idle"  # idle | selected | op
    sketch_id: Optional[str] = None
    op: Optional[str] = None
    hand0: Optional[Vec3] = None     # anchor hand position
    center0: Optional[Vec3] = None   # sketch world-bbox center at anchor, board-local
    axis0: Optional[Vec3] = None     # viewer forward at anchor, board-local
    dist0: float = 0.0               # anchor hand distance from center
    phi_last: float = 0.0            # last hand yaw angle, for sweep tracking
    pend_trans: Vec3 = geo.ZERO
    pend_rot: float = 0.0
    pend_scale: float = 1.0

    def to_dict(self) -> dict:
        d: dict = {"mode": self.mode}
        if self.mode != "idle":
            d["sketch"] = self.sketch_id
        if self.mode == "op":
            d.update({
                "op": self.op,
                "hand0": self.hand0.to_list(),
                "center0": self.center0.to_list(),
                "axis0": self.axis0.to_list(),
                "dist0": float(self.dist0),
                "phi_last": float(self.phi_last),
                "pend_trans": self.pend_trans.to_list(),
                "pend_rot": float(self.pend_rot),
                "pend_scale": float(self.pend_scale),
            })
        return d

    @staticmethod
    def from_dict(d: dict) -> "Selection":
        sel = Selection(mode=d["mode"], sketch_id=d.get("sketch"))
        if sel.mode == "op":
            sel.op = d["op"]
            sel.hand0 = Vec3.from_list(d["hand0"])
            sel.center0 = Vec3.from_list(d["center0"])
            sel.axis0 = Vec3.from_list(d["axis0"])
            sel.dist0 = float(d["dist0"])
            sel.phi_last = float(d["phi_last"])
            sel.pend_trans = Vec3.from_list(d["pend_trans"])
            sel.pend_rot = float(d["pend_rot"])
            sel.pend_scale = float(d["pend_scale"])
        return sel


# ---------------------------------------------------------------------------
# Session state
# ---------------------------------------------------------------------------

@dataclass
class SessionState:
    seq: int = 0
    tick_hz: int = 20
    config: str = "side_by_side"
    avatars: Dict[str, Avatar] = field(default_factory=dict)
    boards: List[Board] = field(default_factory=list)
    locks: Dict[str, DrawToken] = field(default_factory=dict)
    telepathy: Dict[str, dict] = field(default_factory=dict)  # observer -> {observee, mode}
    selections: Dict[str, Selection] = field(default_factory=dict)
    open_strokes: Dict[str, OpenStroke] = field(default_factory=dict)
    join_count: int = 0

    # -- lookups ------------------------------------------------------------

    def board(self, board_id: str) -> Optional[Board]:
        for b in self.boards:
            if b.id == board_id:
                return b
        return None

    def vertical_boards(self) -> List[Board]:
        return [b for b in self.boards if b.kind == "vertical"]

    def find_sketch(self, sketch_id: str) -> Optional[Tuple[Board, Sketch3D]]:
        for b in self.boards:
            s = b.sketch(sketch_id)
            if s is not None:
                return b, s
        return None

    def open_stroke_for(self, author: str, board_id: str) -> Optional[OpenStroke]:
        for os_ in self.open_strokes.values():
            if os_.author == author and os_.board_id == board_id:
                return os_
        return None

    def selection(self, avatar_id: str) -> Selection:
        return self.selections.get(avatar_id, Selection())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "tick_hz": self.tick_hz,
            "config": self.config,
            "avatars": {k: a.to_dict() for k, a in sorted(self.avatars.items())},
            "boards": [b.to_dict() for b in self.boards],
            "locks": {k: t.to_dict() for k, t in sorted(self.locks.items())},
            "telepathy": {k: dict(v) for k, v in sorted(self.telepathy.items())},
            "selections": {k: s.to_dict() for k, s in sorted(self.selections.items())},
            "strokes_open": {k: o.to_dict() for k, o in sorted(self.open_strokes.items())},
            "join_count": self.join_count,
        }

    @staticmethod
    def from_dict(d: dict) -> "SessionState":
        return SessionState(
            seq=int(d["seq"]),
            tick_hz=int(d["tick_hz"]),
            config=d["config"],
            avatars={k: Avatar.from_dict(v) for k, v in sorted(d["avatars"].items())},
            boards=[Board.from_dict(b) for b in d["boards"]],
            locks={k: DrawToken.from_dict(v) for k, v in sorted(d["locks"].items())},
            telepathy={k: dict(v) for k, v in sorted(d["telepathy"].items())},
            selections={k: Selection.from_dict(v) for k, v in sorted(d["selections"].items())},
            open_strokes={k: OpenStroke.from_dict(v)
                          for k, v in sorted(d["strokes_open"].items())},
            join_count=int(d["join_count"]),
        )

    def clone(self) -> "SessionState":
        return SessionState.from_dict(self.to_dict())

    def content_hash(self) -> str:
        return digest(self.to_dict())


def new_session(n_boards: int = 1, config: str = "side_by_side",
                tick_hz: int = 20) -> SessionState:
    """Fresh session with *n_boards* vertical boards placed on the walls
    of a square room, all facing the center."""
    if n_boards < 1:
        raise ValueError("need at least one board")
    if config not in CONFIG_KINDS:
        raise ValueError(f"unknown config {config!r}")
    state = SessionState(config=config, tick_hz=tick_hz)
    for i in range(n_boards):
        yaw = (i % 4) * (math.pi / 2.0)
        ring = 2.0 + 1.0 * (i // 4)
        sin_y, cos_y = math.sin(yaw), math.cos(yaw)
        center = Vec3(ring * sin_y, 1.5, ring * cos_y)
        fwd = Vec3(-sin_y, 0.0, -cos_y)
        board = Board(
            id=f"b{i}",
            pose=Pose(center, geo.look_frame(fwd)),
            width=2.0,
            height=1.5,
        )
        state.boards.append(board)
        state.locks[board.id] = DrawToken()
    return state


# ---------------------------------------------------------------------------
# Gaze classification (used by the reducer; re-exported by view composition)
# ---------------------------------------------------------------------------

def classify_gaze(head: Pose, boards: List[Board]) -> Optional[str]:
    """The vertical board the head-forward ray hits (smallest t wins);
    otherwise the board whose center subtends the smallest angle."""
    verticals = [b for b in boards if b.kind == "vertical"]
    if not verticals:
        return None
    ray = Ray(head.position, head.frame.forward)
    best_id: Optional[str] = None
    best_t = math.inf
    for b in verticals:
        hit = geo.ray_plane_intersect(ray, b.plane())
        if hit is None:
            continue
        point, t = hit
        if b.contains_local(geo.world_to_local(b.pose, point)) and t < best_t:
            best_t = t
            best_id = b.id
    if best_id is not None:
        return best_id
    # Fallback: smallest angle between gaze and direction to board center.
    best_cos = -math.inf
    for b in verticals:
        to_board = b.center() - head.position
        n = to_board.norm()
        if n <= 1e-9:
            return b.id
        cos_a = ray.direction.dot(to_board) / n
        if cos_a > best_cos:
            best_cos = cos_a
            best_id = b.id
    return best_id


def update_gaze(avatar: Avatar, boards: List[Board]) -> None:
    """Apply one gaze evaluation with hysteresis: a new board must win
    GAZE_STICKY_EVALS consecutive evaluations before it takes over."""
    current = classify_gaze(avatar.head, boards)
    if current is None or current == avatar.gaze_board:
        avatar.gaze_cand = None
        avatar.gaze_count = 0
        return
    if avatar.gaze_board is None:
        avatar.gaze_board = current
        avatar.gaze_cand = None
        avatar.gaze_count = 0
        return
    if current == avatar.gaze_cand:
        avatar.gaze_count += 1
    else:
        avatar.gaze_cand = current
        avatar.gaze_count = 1
    if avatar.gaze_count >= GAZE_STICKY_EVALS:
        avatar.gaze_board = current
        avatar.gaze_cand = None
        avatar.gaze_count = 0


# ---------------------------------------------------------------------------
# Spawn layout
# ---------------------------------------------------------------------------

SPAWN_SPACING = 0.8
SPAWN_BOARD_DISTANCE = 1.5
HEAD_HEIGHT = 1.6
TABLE_HEIGHT = 0.95
HORIZONTAL_BOARD_SIZE = (0.6, 0.4)


def spawn_pose(join_index: int, boards: List[Board]) -> Pose:
    """Participants line up in a row facing the first board, spaced by
    join order."""
    verticals = [b for b in boards if b.kind == "vertical"]
    if verticals:
        b = verticals[0]
        fwd = b.pose.frame.forward.scaled(-1.0)  # face the board
        base = b.center() - fwd.scaled(SPAWN_BOARD_DISTANCE)
        right = geo.look_frame(fwd).right
    else:
        fwd = geo.Z_AXIS
        base = geo.ZERO
        right = geo.X_AXIS
    offset = (join_index - 1.5) * SPAWN_SPACING
    pos = Vec3(base.x + right.x * offset, HEAD_HEIGHT, base.z + right.z * offset)
    return Pose(pos, geo.look_frame(fwd))


def default_hands(head: Pose) -> Tuple[Pose, Pose]:
    left = Pose(geo.local_to_world(head, Vec3(-0.25, -0.45, 0.3)), head.frame)
    right = Pose(geo.local_to_world(head, Vec3(0.25, -0.45, 0.3)), head.frame)
    return left, right


def make_private_board(avatar: Avatar) -> Board:
    """The avatar's horizontal drawing surface, in front of it at table
    height, with the v axis running away from the user."""
    fwd = avatar.head.frame.forward
    horiz = Vec3(fwd.x, 0.0, fwd.z)
    n = horiz.norm()
    v_axis = Vec3(horiz.x / n, 0.0, horiz.z / n) if n > 1e-9 else geo.Z_AXIS
    center = Vec3(
        avatar.head.position.x + v_axis.x * 0.45,
        TABLE_HEIGHT,
        avatar.head.position.z + v_axis.z * 0.45,
    )
    frame = Frame(right=v_axis.cross(geo.Y_AXIS), up=v_axis, forward=geo.Y_AXIS)
    w, h = HORIZONTAL_BOARD_SIZE
    return Board(id=f"h_{avatar.id}", pose=Pose(center, frame), width=w, height=h,
                 kind="horizontal", owner=avatar.id)


# ---------------------------------------------------------------------------
# Reducer
# ---------------------------------------------------------------------------

def _require_avatar(state: SessionState, avatar_id: str) -> Avatar:
    av = state.avatars.get(avatar_id)
    if av is None:
        raise Rejection("unknown_avatar", avatar_id)
    return av


def _require_board(state: SessionState, board_id: str) -> Board:
    b = state.board(board_id)
    if b is None:
        raise Rejection("unknown_board", board_id)
    return b


def _parse_pose(d: dict, what: str) -> Pose:
    try:
        pose = Pose.from_dict(d)
        pose.validate()
    except (geo.GeometryError, KeyError, TypeError) as exc:
        raise Rejection("bad_pose", f"{what}: {exc}") from None
    return pose


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def _hand_yaw(v: Vec3) -> float:
    """Yaw of a board-local offset around +y (0 along +x, +pi/2 toward -z)."""
    return math.atan2(-v.z, v.x)


def apply_event(state: SessionState, msg: Message) -> None:
    """Validate *msg* against *state* and apply it.

    Raises :class:`Rejection` (before any mutation) when the event is
    invalid.  ``msg.seq`` must be the next sequence number; the reducer
    advances ``state.seq`` to it.
    """
    if msg.kind not in EVENT_KINDS:
        raise Rejection("not_an_event", msg.kind)
    if msg.seq <= state.seq:
        raise Rejection("stale_seq", f"{msg.seq} <= {state.seq}")
    _HANDLERS[msg.kind](state, msg)
    state.seq = msg.seq


def _on_hello(state: SessionState, msg: Message) -> None:
    if msg.sender in state.avatars:
        raise Rejection("duplicate_id", msg.sender)
    if not msg.sender:
        raise Rejection("bad_id", "empty avatar id")
    head = spawn_pose(state.join_count, state.boards)
    left, right = default_hands(head)
    avatar = Avatar(id=msg.sender, name=msg.payload["name"],
                    head=head, left_hand=left, right_hand=right)
    update_gaze(avatar, state.boards)
    state.avatars[msg.sender] = avatar
    state.selections[msg.sender] = Selection()
    private = make_private_board(avatar)
    state.boards.append(private)
    state.join_count += 1


def _on_goodbye(state: SessionState, msg: Message) -> None:
    _require_avatar(state, msg.sender)
    del state.avatars[msg.sender]
    state.selections.pop(msg.sender, None)
    state.telepathy.pop(msg.sender, None)
    for observer in sorted(state.telepathy):
        if state.telepathy[observer]["observee"] == msg.sender:
            del state.telepathy[observer]
    state.boards = [b for b in state.boards if b.owner != msg.sender]
    for token in state.locks.values():
        if token.holder == msg.sender:
            token.holder = None
        if msg.sender in token.queue:
            token.queue.remove(msg.sender)
    for sid in [sid for sid, o in state.open_strokes.items() if o.author == msg.sender]:
        del state.open_strokes[sid]


def _on_avatar_update(state: SessionState, msg: Message) -> None:
    avatar = _require_avatar(state, msg.sender)
    head = _parse_pose(msg.payload["head"], "head")
    left = _parse_pose(msg.payload["left"], "left hand")
    right = _parse_pose(msg.payload["right"], "right hand")
    avatar.head = head
    avatar.left_hand = left
    avatar.right_hand = right
    update_gaze(avatar, state.boards)


def _on_stroke_begin(state: SessionState, msg: Message) -> None:
    board = _require_board(state, msg.payload["board"])
    _require_avatar(state, msg.sender)
    if board.kind != "vertical":
        raise Rejection("bad_board", "strokes are drawn on vertical boards")
    token = state.locks[board.id]
    if token.holder != msg.sender:
        raise Rejection("no_lock", f"{msg.sender} does not hold the draw token "
                                   f"for {board.id}")
    if state.open_stroke_for(msg.sender, board.id) is not None:
        raise Rejection("stroke_open", "previous stroke not ended")
    color = msg.payload["color"]
    if not all(0.0 <= c <= 1.0 for c in color):
        raise Rejection("bad_color", "components must lie in [0,1]")
    stroke_id = f"st{msg.seq}"
    state.open_strokes[stroke_id] = OpenStroke(
        id=stroke_id, board_id=board.id, author=msg.sender,
        color=(float(color[0]), float(color[1]), float(color[2])),
        width=float(msg.payload["width"]),
    )


def _find_open(state: SessionState, msg: Message) -> OpenStroke:
    stroke = state.open_stroke_for(msg.sender, msg.payload["board"])
    if stroke is None:
        _require_board(state, msg.payload["board"])
        raise Rejection("no_open_stroke",
                        f"{msg.sender} has no open stroke on {msg.payload['board']}")
    return stroke


def _on_stroke_points(state: SessionState, msg: Message) -> None:
    stroke = _find_open(state, msg)
    pts = [Vec3.from_list(p) for p in msg.payload["points"]]
    stroke.points.extend(pts)


def _bbox_of_points(points: List[Vec3]) -> Tuple[Vec3, Vec3]:
    lo = [math.inf] * 3
    hi = [-math.inf] * 3
    for p in points:
        for i, c in enumerate(p):
            if c < lo[i]:
                lo[i] = c
            if c > hi[i]:
                hi[i] = c
    return Vec3(*lo), Vec3(*hi)


def _aabb_gap(a: Tuple[Vec3, Vec3], b: Tuple[Vec3, Vec3]) -> float:
    """Distance between two AABBs (0 when they overlap)."""
    g2 = 0.0
    for i in range(3):
        gap = max(a[0][i] - b[1][i], b[0][i] - a[1][i], 0.0)
        g2 += gap * gap
    return math.sqrt(g2)


def _on_stroke_end(state: SessionState, msg: Message) -> None:
    stroke = _find_open(state, msg)
    if not stroke.points:
        del state.open_strokes[stroke.id]
        return  # nothing was drawn; no sketch results
    board = state.board(stroke.board_id)
    new_bbox = _bbox_of_points(stroke.points)
    # Strokes ended shortly after and near an existing sketch merge into it.
    window = int(MERGE_WINDOW_S * state.tick_hz)
    target: Optional[Sketch3D] = None
    for sk in board.sketches:
        if sk.is_empty() or msg.tick - sk.last_tick > window:
            continue
        if _aabb_gap(new_bbox, sk.local_bbox()) > MERGE_DIST:
            continue
        if target is None or sk.last_tick > target.last_tick or \
                (sk.last_tick == target.last_tick and sk.id < target.id):
            target = sk
    del state.open_strokes[stroke.id]
    done = Stroke(id=stroke.id, points=stroke.points,
                  color=stroke.color, width=stroke.width)
    if target is not None:
        # Re-express the drawn points in the sketch's content space so the
        # sketch transform does not double-apply.
        done.points = [target.untransform_point(p) for p in done.points]
        target.strokes.append(done)
        target.last_tick = msg.tick
        return
    lo, hi = new_bbox
    pivot = Vec3((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, (lo.z + hi.z) / 2.0)
    board.sketches.append(Sketch3D(
        id=f"sk{msg.seq}", board_id=board.id, strokes=[done],
        pivot=pivot, last_tick=msg.tick,
    ))


def _on_sketch_op(state: SessionState, msg: Message) -> None:
    op = msg.payload["op"]
    if op == "select":
        _op_select(state, msg)
    elif op == "choose":
        _op_choose(state, msg)
    elif op == "update":
        _op_update(state, msg)
    elif op == "commit":
        _op_commit(state, msg)
    elif op == "spawn":
        _op_spawn(state, msg)


def _op_spawn(state: SessionState, msg: Message) -> None:
    board = _require_board(state, msg.payload["board"])
    _require_avatar(state, msg.sender)
    if board.kind != "vertical":
        raise Rejection("bad_board", "primitives spawn on vertical boards")
    center = Vec3.from_list(msg.payload["center"])
    size = Vec3.from_list(msg.payload["size"])
    color = msg.payload["color"]
    if not all(0.0 <= c <= 1.0 for c in color):
        raise Rejection("bad_color", "components must lie in [0,1]")
    prim = Primitive(shape=msg.payload["shape"], center=center, size=size,
                     color=(float(color[0]), float(color[1]), float(color[2])))
    board.sketches.append(Sketch3D(
        id=f"sk{msg.seq}", board_id=board.id, primitives=[prim],
        pivot=center, last_tick=msg.tick,
    ))


def _op_select(state: SessionState, msg: Message) -> None:
    _require_avatar(state, msg.sender)
    sel = state.selection(msg.sender)
    if sel.mode == "op":
        raise Rejection("op_active", "cannot re-select during an operation")
    try:
        ray = Ray.from_dict(msg.payload["ray"])
    except geo.GeometryError as exc:
        raise Rejection("bad_ray", str(exc)) from None
    if abs(ray.direction.norm() - 1.0) > 1e-6:
        raise Rejection("bad_ray", "direction must be unit length")
    best: Optional[Tuple[float, str]] = None
    for board in state.boards:
        for sk in board.sketches:
            if sk.is_empty():
                continue
            lo, hi = sk.world_bbox(board.pose)
            lo = Vec3(lo.x - PICK_INFLATE, lo.y - PICK_INFLATE, lo.z - PICK_INFLATE)
            hi = Vec3(hi.x + PICK_INFLATE, hi.y + PICK_INFLATE, hi.z + PICK_INFLATE)
            t = geo.ray_aabb_intersect(ray, lo, hi)
            if t is None:
                continue
            key = (t, sk.id)
            if best is None or key < best:
                best = key
    if best is None:
        state.selections[msg.sender] = Selection()
    else:
        state.selections[msg.sender] = Selection(mode="selected", sketch_id=best[1])


def _op_choose(state: SessionState, msg: Message) -> None:
    avatar = _require_avatar(state, msg.sender)
    sel = state.selection(msg.sender)
    if sel.mode != "selected":
        raise Rejection("not_selected", "choose requires an open pie menu")
    slot = msg.payload["slot"]
    found = state.find_sketch(sel.sketch_id)
    if found is None:
        raise Rejection("gone_sketch", sel.sketch_id or "")
    board, sketch = found
    if slot == "delete":
        board.sketches.remove(sketch)
        _reset_selections_for(state, sketch.id)
        return
    hand = _parse_pose(msg.payload["hand"], "hand")
    lo, hi = sketch.world_bbox(board.pose)
    world_center = Vec3((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, (lo.z + hi.z) / 2.0)
    center0 = geo.world_to_local(board.pose, world_center)
    hand0 = geo.world_to_local(board.pose, hand.position)
    axis0 = geo.world_to_local_dir(board.pose, avatar.head.frame.forward)
    state.selections[msg.sender] = Selection(
        mode="op", sketch_id=sketch.id, op=slot,
        hand0=hand0, center0=center0, axis0=axis0,
        dist0=(hand0 - center0).norm(),
        phi_last=_hand_yaw(hand0 - center0),
    )


def _reset_selections_for(state: SessionState, sketch_id: str) -> None:
    for aid in sorted(state.selections):
        if state.selections[aid].sketch_id == sketch_id:
            state.selections[aid] = Selection()


def _op_update(state: SessionState, msg: Message) -> None:
    _require_avatar(state, msg.sender)
    sel = state.selection(msg.sender)
    if sel.mode != "op":
        raise Rejection("not_active", "no operation in progress")
    found = state.find_sketch(sel.sketch_id)
    if found is None:
        raise Rejection("gone_sketch", sel.sketch_id or "")
    board, _ = found
    hand = _parse_pose(msg.payload["hand"], "hand")
    hand_local = geo.world_to_local(board.pose, hand.position)
    if sel.op in ("move", "copy"):
        sel.pend_trans = hand_local - sel.hand0
    elif sel.op == "move_away":
        d = (hand_local - sel.hand0).dot(sel.axis0)
        sel.pend_trans = sel.axis0.scaled(d)
    elif sel.op == "rotate":
        phi = _hand_yaw(hand_local - sel.center0)
        sel.pend_rot += _wrap_angle(phi - sel.phi_last)
        sel.phi_last = phi
    elif sel.op == "scale":
        if sel.dist0 > 1e-9:
            ratio = (hand_local - sel.center0).norm() / sel.dist0
            sel.pend_scale = min(max(ratio, SCALE_CLAMP[0]), SCALE_CLAMP[1])


def _rotate_y(v: Vec3, angle: float) -> Vec3:
    c, s = math.cos(angle), math.sin(angle)
    return Vec3(v.x * c + v.z * s, v.y, -v.x * s + v.z * c)


def _op_commit(state: SessionState, msg: Message) -> None:
    _require_avatar(state, msg.sender)
    sel = state.selection(msg.sender)
    if sel.mode != "op":
        raise Rejection("not_active", "no operation in progress")
    found = state.find_sketch(sel.sketch_id)
    if found is None:
        raise Rejection("gone_sketch", sel.sketch_id or "")
    board, sketch = found
    if sel.op in ("move", "move_away"):
        sketch.translation = sketch.translation + sel.pend_trans
    elif sel.op == "rotate":
        # Rotate the placed content about the anchor center: compose the
        # extra yaw into the transform and fix up the translation.
        arm = sketch.pivot + sketch.translation - sel.center0
        sketch.translation = sel.center0 - sketch.pivot + _rotate_y(arm, sel.pend_rot)
        sketch.rotation += sel.pend_rot
    elif sel.op == "scale":
        arm = sketch.pivot + sketch.translation - sel.center0
        sketch.translation = sel.center0 - sketch.pivot + arm.scaled(sel.pend_scale)
        sketch.scale *= sel.pend_scale
    elif sel.op == "copy":
        clone = sketch.deep_copy(f"sk{msg.seq}")
        clone.translation = clone.translation + sel.pend_trans
        clone.last_tick = msg.tick
        board.sketches.append(clone)
    sketch.last_tick = msg.tick
    state.selections[msg.sender] = Selection(mode="selected", sketch_id=sketch.id)


def _on_draw_request(state: SessionState, msg: Message) -> None:
    board = _require_board(state, msg.payload["board"])
    _require_avatar(state, msg.sender)
    token = state.locks.setdefault(board.id, DrawToken())
    if token.holder == msg.sender or msg.sender in token.queue:
        return  # duplicate request; harmless
    token.queue.append(msg.sender)


def _on_draw_grant(state: SessionState, msg: Message) -> None:
    board = _require_board(state, msg.payload["board"])
    token = state.locks[board.id]
    holder = msg.payload["holder"]
    if token.holder is not None:
        raise Rejection("token_held", f"{board.id} already granted to {token.holder}")
    if not token.queue or token.queue[0] != holder:
        raise Rejection("bad_grant", f"{holder} is not at the head of the queue")
    token.holder = token.queue.pop(0)


def _on_draw_release(state: SessionState, msg: Message) -> None:
    board = _require_board(state, msg.payload["board"])
    token = state.locks[board.id]
    if token.holder != msg.sender:
        raise Rejection("not_holder", f"{msg.sender} does not hold the token "
                                      f"for {board.id}")
    if state.open_stroke_for(msg.sender, board.id) is not None:
        raise Rejection("stroke_open", "end the stroke before releasing the pen")
    token.holder = None


def _on_config_switch(state: SessionState, msg: Message) -> None:
    state.config = msg.payload["config"]


def _on_telepathy_set(state: SessionState, msg: Message) -> None:
    _require_avatar(state, msg.sender)
    observee = msg.payload["observee"]
    if observee is None:
        state.telepathy.pop(msg.sender, None)
        return
    if observee == msg.sender:
        raise Rejection("self_observe", "cannot observe yourself")
    _require_avatar(state, observee)
    state.telepathy[msg.sender] = {"observee": observee, "mode": msg.payload["mode"]}


_HANDLERS = {
    "hello": _on_hello,
    "goodbye": _on_goodbye,
    "avatar_update": _on_avatar_update,
    "stroke_begin": _on_stroke_begin,
    "stroke_points": _on_stroke_points,
    "stroke_end": _on_stroke_end,
    "sketch_op": _on_sketch_op,
    "draw_request": _on_draw_request,
    "draw_grant": _on_draw_grant,
    "draw_release": _on_draw_release,
    "config_switch": _on_config_switch,
    "telepathy_set": _on_telepathy_set,
}


def pending_grants(state: SessionState) -> List[Tuple[str, str]]:
    """Boards whose token is free but queued: (board id, next holder).
    The relay turns these into draw_grant events after every applied event."""
    due = []
    for board_id in sorted(state.locks):
        token = state.locks[board_id]
        if token.holder is None and token.queue:
            due.append((board_id, token.queue[0]))
    return due
