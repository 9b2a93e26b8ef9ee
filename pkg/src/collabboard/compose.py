"""Per-viewer scene composition.

The replicated session state is the same for everyone; what differs is
how each participant *sees* it.  This module turns (state, viewer) into
a :class:`ViewerScene`:

* ``side_by_side`` — everyone appears where they really are.
* ``mirrored`` — each other participant is reflected across the plane of
  the board they are gazing at, so you stand face to face with them
  across the content.  Because the mirror is the content plane itself,
  a reflected participant's gaze and pointing rays land on the same
  board points as the originals.
* ``eyes_free`` — participants stay at their true positions, but the
  viewer additionally gets a private horizontal surface at table height
  showing a flattened copy of the board they are looking at; strokes
  drawn on the table are mapped up onto the vertical board.

Telepathy composes one participant's view for another, either into a
small floating window or as a full camera takeover (first or third
person).

All composition is deterministic and pure: scenes built from equal
states hash equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

from . import geometry as geo
from .geometry import Pose, Vec3
from .model import (
    Avatar,
    Board,
    SessionState,
    Sketch3D,
    classify_gaze,
    update_gaze,
)
from .protocol import digest

# Telepathy window: anchored ahead and to the upper-left of the observer's
# head, billboarded to the observer.
WINDOW_OFFSET = Vec3(-0.25, 0.15, 0.4)
WINDOW_SIZE = (0.32, 0.18)
# Third-person telepathy camera, relative to the observee's head frame.
THIRD_PERSON_BACK = 0.5
THIRD_PERSON_UP = 0.3

__all__ = [
    "PlacedAvatar", "BoardView", "TelepathyView", "ViewerScene",
    "compose_view", "compose_side_by_side", "compose_mirrored",
    "compose_eyes_free", "map_horizontal_to_vertical",
    "map_table_to_board", "map_board_to_table", "flatten_point", "gaze_board",
    "classify_gaze", "update_gaze",
]


def gaze_board(avatar: Avatar, boards: List[Board]) -> Optional[str]:
    """The avatar's current (hysteresis-stable) gaze board, falling back
    to a fresh classification before the first committed evaluation."""
    if avatar.gaze_board is not None:
        return avatar.gaze_board
    return classify_gaze(avatar.head, boards)


# ---------------------------------------------------------------------------
# Scene types
# ---------------------------------------------------------------------------

@dataclass
class PlacedAvatar:
    avatar_id: str
    name: str
    head: Pose
    left_hand: Pose
    right_hand: Pose
    mirrored: bool
    gaze_board: Optional[str]

    def to_dict(self) -> dict:
        return {
            "id": self.avatar_id,
            "name": self.name,
            "head": self.head.to_dict(),
            "left": self.left_hand.to_dict(),
            "right": self.right_hand.to_dict(),
            "mirrored": self.mirrored,
            "gaze": self.gaze_board,
        }


@dataclass
class BoardView:
    board_id: str
    pose: Pose
    width: float
    height: float
    kind: str
    sketches: List[dict]
    source_board: Optional[str] = None  # set on projected (table) views

    def to_dict(self) -> dict:
        return {
            "id": self.board_id,
            "pose": self.pose.to_dict(),
            "w": float(self.width),
            "h": float(self.height),
            "kind": self.kind,
            "sketches": self.sketches,
            "source": self.source_board,
        }


@dataclass
class TelepathyView:
    mode: str
    observee: str
    camera: Pose
    window_pose: Optional[Pose] = None
    window_size: Optional[tuple] = None
    scene: Optional[dict] = None  # the observee's composed scene

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "observee": self.observee,
            "camera": self.camera.to_dict(),
            "window": None if self.window_pose is None else {
                "pose": self.window_pose.to_dict(),
                "w": float(self.window_size[0]),
                "h": float(self.window_size[1]),
            },
            "scene": self.scene,
        }


@dataclass
class ViewerScene:
    viewer_id: str
    config: str
    placements: List[PlacedAvatar] = field(default_factory=list)
    board_views: List[BoardView] = field(default_factory=list)
    telepathy: Optional[TelepathyView] = None

    def to_dict(self) -> dict:
        return {
            "viewer": self.viewer_id,
            "config": self.config,
            "placements": [p.to_dict() for p in self.placements],
            "boards": [b.to_dict() for b in self.board_views],
            "telepathy": None if self.telepathy is None else self.telepathy.to_dict(),
        }

    def content_hash(self) -> str:
        return digest(self.to_dict())


# ---------------------------------------------------------------------------
# Eyes-free coordinate mapping
# ---------------------------------------------------------------------------

def map_horizontal_to_vertical(u: float, v: float,
                               h_board: Board, v_board: Board) -> Vec3:
    """World point on the vertical board for a normalized table position.

    ``(u, v)`` is the position on the horizontal board as a fraction of
    its extent (each in [-0.5, 0.5]; u along the table's right, v along
    the axis running away from the user).  The same fraction lands on
    the vertical board, with away-from-user becoming up — so resizing
    the table for coarser or finer hand motion never moves where marks
    appear on the board.
    """
    if h_board.kind != "horizontal" or v_board.kind != "vertical":
        raise ValueError("mapping runs from a horizontal to a vertical board")
    if abs(u) > 0.5 or abs(v) > 0.5:
        raise ValueError(f"normalized coordinates out of range: ({u}, {v})")
    local = Vec3(u * v_board.width, v * v_board.height, 0.0)
    return geo.local_to_world(v_board.pose, local)


def map_table_to_board(p: Vec3, h_board: Board, v_board: Board) -> Vec3:
    """Physical table-local point -> vertical board-local point, by
    normalizing each surface axis independently (depth rides along with
    the width rescale)."""
    su = v_board.width / h_board.width
    sv = v_board.height / h_board.height
    return Vec3(p.x * su, p.y * sv, p.z * su)


def map_board_to_table(p: Vec3, h_board: Board, v_board: Board) -> Vec3:
    """Inverse of :func:`map_table_to_board` (exact up to float division)."""
    su = v_board.width / h_board.width
    sv = v_board.height / h_board.height
    return Vec3(p.x / su, p.y / sv, p.z / su)


def flatten_point(p: Vec3) -> Vec3:
    """Project a board-local point onto the board plane (drop depth)."""
    return Vec3(p.x, p.y, 0.0)


# ---------------------------------------------------------------------------
# Placements per configuration
# ---------------------------------------------------------------------------

def _true_placement(av: Avatar) -> PlacedAvatar:
    return PlacedAvatar(
        avatar_id=av.id, name=av.name,
        head=av.head, left_hand=av.left_hand, right_hand=av.right_hand,
        mirrored=False, gaze_board=av.gaze_board,
    )


def _mirrored_placement(av: Avatar, state: SessionState) -> PlacedAvatar:
    board_id = gaze_board(av, state.boards)
    board = state.board(board_id) if board_id else None
    if board is None:
        return _true_placement(av)
    plane = board.plane()
    return PlacedAvatar(
        avatar_id=av.id, name=av.name,
        head=geo.reflect_pose(av.head, plane),
        left_hand=geo.reflect_pose(av.left_hand, plane),
        right_hand=geo.reflect_pose(av.right_hand, plane),
        mirrored=True, gaze_board=board_id,
    )


def _others(state: SessionState, viewer_id: str) -> List[Avatar]:
    return [state.avatars[aid] for aid in sorted(state.avatars) if aid != viewer_id]


def _vertical_views(state: SessionState) -> List[BoardView]:
    return [
        BoardView(
            board_id=b.id, pose=b.pose, width=b.width, height=b.height,
            kind=b.kind, sketches=[s.to_dict() for s in b.sketches],
        )
        for b in state.vertical_boards()
    ]


def _baked_stroke(points: List[Vec3], color, width: float, sid: str) -> dict:
    return {
        "id": sid,
        "points": [p.to_list() for p in points],
        "color": [float(c) for c in color],
        "width": float(width),
    }


def _projected_table_view(state: SessionState, viewer: Avatar) -> Optional[BoardView]:
    """The viewer's horizontal board showing a flattened, rescaled copy of
    their gaze board's content.  Transforms are baked into the points."""
    h_board = state.board(f"h_{viewer.id}")
    if h_board is None:
        return None
    v_id = gaze_board(viewer, state.boards)
    v_board = state.board(v_id) if v_id else None
    sketches: List[dict] = []
    if v_board is not None:
        for sk in v_board.sketches:
            strokes: List[dict] = []
            for i, stroke in enumerate(sk.strokes):
                pts = [
                    map_board_to_table(
                        flatten_point(sk.transform_point(p)), h_board, v_board)
                    for p in stroke.points
                ]
                strokes.append(_baked_stroke(pts, stroke.color, stroke.width,
                                             f"{sk.id}_v{i}"))
            for i, prim in enumerate(sk.primitives):
                # Primitives project as their flattened footprint outline.
                lo = hi = None
                for corner in prim.corner_points():
                    q = flatten_point(sk.transform_point(corner))
                    if lo is None:
                        lo = [q.x, q.y]
                        hi = [q.x, q.y]
                    else:
                        lo = [min(lo[0], q.x), min(lo[1], q.y)]
                        hi = [max(hi[0], q.x), max(hi[1], q.y)]
                if prim.shape in ("sphere", "cylinder"):
                    c = sk.transform_point(prim.center)
                    r = (prim.size.x / 2.0) * sk.scale
                    lo = [c.x - r, c.y - r] if lo is None else \
                         [min(lo[0], c.x - r), min(lo[1], c.y - r)]
                    hi = [c.x + r, c.y + r] if hi is None else \
                         [max(hi[0], c.x + r), max(hi[1], c.y + r)]
                outline = [
                    Vec3(lo[0], lo[1], 0.0), Vec3(hi[0], lo[1], 0.0),
                    Vec3(hi[0], hi[1], 0.0), Vec3(lo[0], hi[1], 0.0),
                    Vec3(lo[0], lo[1], 0.0),
                ]
                pts = [map_board_to_table(q, h_board, v_board)
                       for q in outline]
                strokes.append(_baked_stroke(pts, prim.color, 0.002,
                                             f"{sk.id}_p{i}"))
            sketches.append({
                "id": f"{sk.id}_proj",
                "board": h_board.id,
                "strokes": strokes,
                "prims": [],
                "trans": [0.0, 0.0, 0.0],
                "rot": 0.0,
                "scale": 1.0,
                "pivot": [0.0, 0.0, 0.0],
                "last_tick": sk.last_tick,
            })
    return BoardView(
        board_id=h_board.id, pose=h_board.pose,
        width=h_board.width, height=h_board.height,
        kind="horizontal", sketches=sketches, source_board=v_id,
    )


def compose_side_by_side(state: SessionState, viewer_id: str) -> ViewerScene:
    return ViewerScene(
        viewer_id=viewer_id, config="side_by_side",
        placements=[_true_placement(av) for av in _others(state, viewer_id)],
        board_views=_vertical_views(state),
    )


def compose_mirrored(state: SessionState, viewer_id: str) -> ViewerScene:
    return ViewerScene(
        viewer_id=viewer_id, config="mirrored",
        placements=[_mirrored_placement(av, state)
                    for av in _others(state, viewer_id)],
        board_views=_vertical_views(state),
    )


def compose_eyes_free(state: SessionState, viewer_id: str) -> ViewerScene:
    scene = ViewerScene(
        viewer_id=viewer_id, config="eyes_free",
        placements=[_true_placement(av) for av in _others(state, viewer_id)],
        board_views=_vertical_views(state),
    )
    viewer = state.avatars.get(viewer_id)
    if viewer is not None:
        table = _projected_table_view(state, viewer)
        if table is not None:
            scene.board_views.append(table)
    return scene


_COMPOSERS = {
    "side_by_side": compose_side_by_side,
    "mirrored": compose_mirrored,
    "eyes_free": compose_eyes_free,
}


# ---------------------------------------------------------------------------
# Telepathy
# ---------------------------------------------------------------------------

def _third_person_camera(head: Pose) -> Pose:
    f, u = head.frame.forward, head.frame.up
    pos = Vec3(
        head.position.x - f.x * THIRD_PERSON_BACK + u.x * THIRD_PERSON_UP,
        head.position.y - f.y * THIRD_PERSON_BACK + u.y * THIRD_PERSON_UP,
        head.position.z - f.z * THIRD_PERSON_BACK + u.z * THIRD_PERSON_UP,
    )
    return Pose(pos, head.frame)


def _telepathy_view(state: SessionState, viewer_id: str) -> Optional[TelepathyView]:
    link = state.telepathy.get(viewer_id)
    if link is None:
        return None
    observee = state.avatars.get(link["observee"])
    if observee is None:
        return None
    mode = link["mode"]
    # The observee's own scene, with their telepathy suppressed (no nesting).
    inner = compose_view(state, observee.id, include_telepathy=False)
    if mode == "windowed":
        viewer = state.avatars[viewer_id]
        return TelepathyView(
            mode=mode, observee=observee.id, camera=observee.head,
            window_pose=Pose(geo.local_to_world(viewer.head, WINDOW_OFFSET),
                             viewer.head.frame),
            window_size=WINDOW_SIZE,
            scene=inner.to_dict(),
        )
    # Immersive modes: the viewer vacates their own spot in the room (their
    # viewpoint has moved into the observee), so their placement is dropped.
    inner.placements = [p for p in inner.placements if p.avatar_id != viewer_id]
    if mode == "immersive_first":
        return TelepathyView(mode=mode, observee=observee.id,
                             camera=observee.head, scene=inner.to_dict())
    # immersive_third: pull the camera back and up; the observee becomes
    # visible, at their true (unmirrored) pose.
    inner.placements.append(_true_placement(observee))
    inner.placements.sort(key=lambda p: p.avatar_id)
    return TelepathyView(mode=mode, observee=observee.id,
                         camera=_third_person_camera(observee.head),
                         scene=inner.to_dict())


def compose_view(state: SessionState, viewer_id: str,
                 include_telepathy: bool = True) -> ViewerScene:
    """The full scene one participant sees, per the active configuration."""
    composer = _COMPOSERS.get(state.config)
    if composer is None:
        raise ValueError(f"unknown config {state.config!r}")
    scene = composer(state, viewer_id)
    if include_telepathy:
        scene.telepathy = _telepathy_view(state, viewer_id)
    return scene
