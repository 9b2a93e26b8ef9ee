"""Session invariants, verified with an independent oracle.

The mirror-composition checks deliberately avoid the package's own
geometry kernels: reflections are recomputed with numpy householder
matrices (R = I - 2nn^T) and ray-plane intersections with plain linear
algebra, so a bug in the hand-written kernels cannot hide itself.
"""

from __future__ import annotations

from typing import Dict, List

import numpy as np

from ..compose import (
    compose_eyes_free,
    compose_mirrored,
    compose_side_by_side,
    map_board_to_table,
    map_horizontal_to_vertical,
    map_table_to_board,
)
from ..geometry import Vec3
from ..model import SessionState

POSE_TOL = 1e-12
GAZE_TOL = 1e-6
MAX_REPORTED = 10


def _vec(v) -> np.ndarray:
    if isinstance(v, Vec3):
        return np.array([v.x, v.y, v.z], dtype=float)
    return np.array(v, dtype=float)


def mirror_matrix(normal: np.ndarray) -> np.ndarray:
    n = normal / np.linalg.norm(normal)
    return np.eye(3) - 2.0 * np.outer(n, n)


def _ray_plane_np(origin: np.ndarray, direction: np.ndarray,
                  point: np.ndarray, normal: np.ndarray):
    denom = float(np.dot(normal, direction))
    if abs(denom) <= 1e-12:
        return None
    t = float(np.dot(normal, point - origin)) / denom
    if t < 0.0:
        return None
    return origin + t * direction


def check_token_safety(state: SessionState) -> List[str]:
    """No board has two writers; queues are clean."""
    bad: List[str] = []
    for board_id in sorted(state.locks):
        token = state.locks[board_id]
        if token.holder is not None and token.holder not in state.avatars:
            bad.append(f"{board_id}: holder {token.holder} is not a participant")
        if token.holder is not None and token.holder in token.queue:
            bad.append(f"{board_id}: holder {token.holder} also queued")
        if len(set(token.queue)) != len(token.queue):
            bad.append(f"{board_id}: duplicate entries in queue")
        for waiting in token.queue:
            if waiting not in state.avatars:
                bad.append(f"{board_id}: queued {waiting} is not a participant")
    for stroke_id in sorted(state.open_strokes):
        stroke = state.open_strokes[stroke_id]
        token = state.locks.get(stroke.board_id)
        if token is None or token.holder != stroke.author:
            bad.append(f"open stroke {stroke_id} by {stroke.author} without "
                       f"the token for {stroke.board_id}")
    return bad


def check_mirror_composition(state: SessionState) -> List[str]:
    """Mirrored placements must match the numpy reflection oracle, and a
    mirrored participant's gaze ray must hit their gaze board at the same
    point as the original ray."""
    bad: List[str] = []
    avatars = sorted(state.avatars)
    for viewer_id in avatars:
        scene = compose_mirrored(state, viewer_id)
        for placed in scene.placements:
            orig = state.avatars[placed.avatar_id]
            if not placed.mirrored:
                if placed.head.to_dict() != orig.head.to_dict():
                    bad.append(f"{viewer_id}->{placed.avatar_id}: unmirrored "
                               f"placement is not the true pose")
                continue
            board = state.board(placed.gaze_board)
            c = _vec(board.pose.position)
            n = _vec(board.pose.frame.forward)
            R = mirror_matrix(n)
            pairs = [
                (orig.head, placed.head), (orig.left_hand, placed.left_hand),
                (orig.right_hand, placed.right_hand),
            ]
            for original, mirrored in pairs:
                exp_pos = c + R @ (_vec(original.position) - c)
                err = float(np.max(np.abs(exp_pos - _vec(mirrored.position))))
                exp_f = R @ _vec(original.frame.forward)
                exp_u = R @ _vec(original.frame.up)
                # A reflection flips handedness; the frame stays right-handed
                # by rebuilding right from the reflected up and forward.
                exp_r = np.cross(exp_u, exp_f)
                for exp_d, got in ((exp_f, mirrored.frame.forward),
                                   (exp_u, mirrored.frame.up),
                                   (exp_r, mirrored.frame.right)):
                    err = max(err, float(np.max(np.abs(exp_d - _vec(got)))))
                if err > POSE_TOL:
                    bad.append(f"{viewer_id}->{placed.avatar_id}: reflected pose "
                               f"off oracle by {err:.3e}")
                    break
            hit_orig = _ray_plane_np(_vec(orig.head.position),
                                     _vec(orig.head.frame.forward), c, n)
            hit_mirr = _ray_plane_np(_vec(placed.head.position),
                                     _vec(placed.head.frame.forward), c, n)
            if (hit_orig is None) != (hit_mirr is None):
                bad.append(f"{viewer_id}->{placed.avatar_id}: gaze ray hit "
                           f"disagreement")
            elif hit_orig is not None:
                gap = float(np.linalg.norm(hit_orig - hit_mirr))
                if gap > GAZE_TOL:
                    bad.append(f"{viewer_id}->{placed.avatar_id}: gaze point "
                               f"moved {gap:.3e} m under mirroring")
    return bad


def check_side_by_side(state: SessionState) -> List[str]:
    bad: List[str] = []
    for viewer_id in sorted(state.avatars):
        scene = compose_side_by_side(state, viewer_id)
        for placed in scene.placements:
            orig = state.avatars[placed.avatar_id]
            if placed.mirrored or placed.head.to_dict() != orig.head.to_dict():
                bad.append(f"{viewer_id}->{placed.avatar_id}: side-by-side "
                           f"placement altered the pose")
    return bad


def check_eyes_free(state: SessionState) -> List[str]:
    """The private table view exists, points at the gaze board, and the
    table<->board mapping round-trips."""
    bad: List[str] = []
    for viewer_id in sorted(state.avatars):
        scene = compose_eyes_free(state, viewer_id)
        tables = [b for b in scene.board_views if b.kind == "horizontal"]
        if len(tables) != 1:
            bad.append(f"{viewer_id}: expected one table view, got {len(tables)}")
            continue
        table = tables[0]
        if table.board_id != f"h_{viewer_id}":
            bad.append(f"{viewer_id}: table view is {table.board_id}")
        h_board = state.board(table.board_id)
        src = state.board(table.source_board) if table.source_board else None
        if src is None:
            bad.append(f"{viewer_id}: table view has no source board")
            continue
        for p in (Vec3(0.1, 0.05, 0.0), Vec3(-0.25, 0.15, 0.0),
                  Vec3(0.0, -0.19, 0.0)):
            up = map_table_to_board(p, h_board, src)
            back = map_board_to_table(up, h_board, src)
            if max(abs(back.x - p.x), abs(back.y - p.y), abs(back.z - p.z)) > 1e-9:
                bad.append(f"{viewer_id}: mapping round-trip error at {p}")
        # normalized positions land at the same fraction of the big board
        for u, v in ((0.0, 0.0), (0.5, 0.5), (-0.37, 0.21)):
            world = map_horizontal_to_vertical(u, v, h_board, src)
            fr = src.pose.frame
            exp = (_vec(src.pose.position)
                   + _vec(fr.right) * (u * src.width)
                   + _vec(fr.up) * (v * src.height))
            if np.max(np.abs(_vec(world) - exp)) > 1e-9:
                bad.append(f"{viewer_id}: normalized mapping off at ({u}, {v})")
        expected = sum(len(sk.strokes) + len(sk.primitives) for sk in src.sketches)
        baked = sum(len(sk["strokes"]) for sk in table.sketches)
        if baked != expected:
            bad.append(f"{viewer_id}: table shows {baked} strokes, source has "
                       f"{expected} drawable items")
    return bad


def check_serialization(state: SessionState) -> List[str]:
    clone = SessionState.from_dict(state.to_dict())
    if clone.content_hash() != state.content_hash():
        return ["state does not survive a serialization round-trip"]
    return []


def run_state_checks(state: SessionState, include_composition: bool = True) -> Dict[str, dict]:
    """All invariant checks as {name: {ok, violations}} (violations capped)."""
    suite = {"token_safety": check_token_safety}
    if include_composition:
        suite.update({
            "mirror_composition": check_mirror_composition,
            "side_by_side": check_side_by_side,
            "eyes_free": check_eyes_free,
            "serialization": check_serialization,
        })
    report: Dict[str, dict] = {}
    for name, fn in suite.items():
        violations = fn(state)
        report[name] = {"ok": not violations,
                        "violations": violations[:MAX_REPORTED]}
    return report
