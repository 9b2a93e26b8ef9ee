#!/usr/bin/env python3
"""Reference-log generator for cross-implementation replay tests.

Drives the Python reducer through a scripted workload and prints a JSON
log: the initial state, every event frame (hex) with the state digest
after applying it, rejection probes (frames that must be refused with a
specific code and leave the state untouched), and composed-view
checkpoints.  The browser client replays the same frames through its own
reducer and must reproduce every digest and composed view byte for byte.

Numeric ground rules (so digests stay bit-identical across runtimes):
  * head/forward vectors are axis-aligned or Pythagorean unit vectors
    such as (0.6, 0, 0.8) -- no free-angle trig on input,
  * gesture anchor hands are placed at board-local offsets with an exact
    zero cross-axis component, so the tracked yaw angles evaluate to the
    exact IEEE constants -0.0, pi/2, ... on which libm implementations
    agree bit for bit,
  * rotation sweeps therefore accumulate to multiples of pi/2, where
    sin/cos are also bit-identical across the runtimes we target.
A free-angle rotation workload is exercised separately under a numeric
tolerance (see replay.test.ts).
"""
from __future__ import annotations

import json
import math
import sys

from collabboard import geometry as geo
from collabboard.compose import compose_view
from collabboard.geometry import Pose, Vec3
from collabboard.model import Rejection, apply_event, new_session
from collabboard.protocol import Message, canonical_json, digest, encode

FREE_ANGLES = "--free-angles" in sys.argv

state = new_session(2, "side_by_side", 20)
steps: list = []
seq = 0


def emit(kind: str, sender: str, payload: dict, tick: int) -> None:
    global seq
    seq += 1
    m = Message(kind=kind, sender=sender, payload=payload, seq=seq, tick=tick)
    apply_event(state, m)
    step = {"frame": encode(m).hex(), "digest": digest(state.to_dict())}
    if FREE_ANGLES:
        # digests are useless under numeric tolerance; ship the full state
        step["state"] = canonical_json(state.to_dict())
    steps.append(step)


def probe(kind: str, sender: str, payload: dict, code: str,
          seq_override: int | None = None, tick: int = 0) -> None:
    """Apply a message that must be rejected with `code` (and not mutate)."""
    m = Message(kind=kind, sender=sender, payload=payload,
                seq=(seq + 1 if seq_override is None else seq_override), tick=tick)
    try:
        apply_event(state, m)
    except Rejection as exc:
        assert exc.code == code, f"probe {kind}: got {exc.code!r}, wanted {code!r}"
        steps.append({"probe": encode(m).hex(), "code": code})
        return
    raise AssertionError(f"probe {kind} was unexpectedly accepted")


def compose_check(viewer: str) -> None:
    steps.append({"compose": viewer,
                  "json": canonical_json(compose_view(state, viewer).to_dict())})


def pose(px: float, py: float, pz: float,
         fx: float, fy: float, fz: float) -> dict:
    return Pose(Vec3(px, py, pz), geo.look_frame(Vec3(fx, fy, fz))).to_dict()


def avatar_payload(px: float, py: float, pz: float,
                   fx: float, fy: float, fz: float) -> dict:
    head = pose(px, py, pz, fx, fy, fz)
    return {"head": head,
            "left": pose(px - 0.25, py - 0.45, pz + 0.25, fx, fy, fz),
            "right": pose(px + 0.25, py - 0.45, pz + 0.25, fx, fy, fz)}


def board_local_pose(board_id: str, lx: float, ly: float, lz: float) -> dict:
    """A hand pose whose world position maps back to the given board-local
    coordinates (exactly, for boards with axis-aligned frames)."""
    b = state.board(board_id)
    p = geo.local_to_world(b.pose, Vec3(lx, ly, lz))
    return Pose(p, geo.look_frame(Vec3(0.0, 0.0, 1.0))).to_dict()


def bbox_center_local(board_id: str, sketch_id: str) -> Vec3:
    b = state.board(board_id)
    lo, hi = b.sketch(sketch_id).world_bbox(b.pose)
    mid = Vec3((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, (lo.z + hi.z) / 2.0)
    return geo.world_to_local(b.pose, mid)


def bbox_center_world(board_id: str, sketch_id: str) -> Vec3:
    b = state.board(board_id)
    lo, hi = b.sketch(sketch_id).world_bbox(b.pose)
    return Vec3((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, (lo.z + hi.z) / 2.0)


def selected(avatar: str) -> str:
    sel = state.selections[avatar]
    assert sel.mode in ("selected", "op"), sel.mode
    return sel.sketch_id


IDENT = {"op": "commit"}

# --- join ------------------------------------------------------------------
emit("hello", "a", {"name": "Alice"}, 0)
emit("hello", "b", {"name": "Bob"}, 0)

probe("hello", "a", {"name": "again"}, "duplicate_id")
probe("hello", "", {"name": "nobody"}, "bad_id")
probe("hello", "zz", {"name": "late"}, "stale_seq", seq_override=1)
probe("welcome", "relay", {"state": {}}, "not_an_event")
probe("avatar_update", "ghost", avatar_payload(0, 1.6, 0, 0, 0, 1), "unknown_avatar")
bad_pose = avatar_payload(0.0, 1.6, 0.0, 0.0, 0.0, 1.0)
bad_pose["head"]["up"] = [0.0, 0.0, 1.0]  # collinear with fwd: not a frame
probe("avatar_update", "a", bad_pose, "bad_pose")

# --- avatar a draws on b0; two nearby strokes merge, a far one does not -----
emit("draw_request", "a", {"board": "b0"}, 1)
emit("draw_grant", "relay", {"board": "b0", "holder": "a"}, 1)

probe("draw_grant", "relay", {"board": "b0", "holder": "b"}, "token_held")
probe("stroke_begin", "b", {"board": "b0", "color": [0.1, 0.9, 0.2], "width": 0.02},
      "no_lock")
probe("draw_release", "b", {"board": "b0"}, "not_holder")
probe("stroke_begin", "a", {"board": "nope", "color": [0.0, 0.0, 0.0], "width": 0.01},
      "unknown_board")

emit("stroke_begin", "a", {"board": "b0", "color": [0.25, 0.5, 0.75], "width": 0.01}, 1)

probe("stroke_begin", "a", {"board": "b0", "color": [0.25, 0.5, 0.75], "width": 0.01},
      "stroke_open")
probe("draw_release", "a", {"board": "b0"}, "stroke_open")

emit("stroke_points", "a",
     {"board": "b0", "points": [[-0.25, -0.125, 0.0], [0.25, 0.125, 0.0]]}, 2)
emit("stroke_end", "a", {"board": "b0"}, 2)
sk_a = f"sk{seq}"

probe("stroke_begin", "a", {"board": "b0", "color": [1.5, 0.0, 0.0], "width": 0.01},
      "bad_color")
probe("stroke_points", "a", {"board": "b0", "points": [[0.0, 0.0, 0.0]]},
      "no_open_stroke")
probe("stroke_points", "a", {"board": "nope", "points": [[0.0, 0.0, 0.0]]},
      "unknown_board")
probe("stroke_end", "a", {"board": "b0"}, "no_open_stroke")

# nearby in space and time: merges into sk_a
emit("stroke_begin", "a", {"board": "b0", "color": [0.25, 0.5, 0.75], "width": 0.01}, 3)
emit("stroke_points", "a",
     {"board": "b0", "points": [[0.3, 0.15, 0.0], [0.35, 0.2, 0.0]]}, 3)
emit("stroke_end", "a", {"board": "b0"}, 3)
assert state.board("b0").sketch(sk_a) is not None
assert len(state.board("b0").sketch(sk_a).strokes) == 2, "expected a merge"

# far away: separate sketch
emit("stroke_begin", "a", {"board": "b0", "color": [0.25, 0.5, 0.75], "width": 0.01}, 10)
emit("stroke_points", "a",
     {"board": "b0", "points": [[-0.9, 0.6, 0.0], [-0.8, 0.7, 0.0]]}, 10)
emit("stroke_end", "a", {"board": "b0"}, 10)
sk_far = f"sk{seq}"
assert state.board("b0").sketch(sk_far) is not None

emit("draw_release", "a", {"board": "b0"}, 11)

probe("draw_grant", "relay", {"board": "b0", "holder": "a"}, "bad_grant")

# --- avatar b takes the pen, draws an off-plane stroke ----------------------
emit("draw_request", "b", {"board": "b0"}, 11)
emit("draw_grant", "relay", {"board": "b0", "holder": "b"}, 11)
emit("stroke_begin", "b", {"board": "b0", "color": [0.1, 0.9, 0.2], "width": 0.02}, 12)
emit("stroke_points", "b",
     {"board": "b0", "points": [[-0.5, -0.5, 0.0625], [-0.4375, -0.4375, 0.0625]]}, 12)
emit("stroke_end", "b", {"board": "b0"}, 12)
sk_b = f"sk{seq}"
assert state.board("b0").sketch(sk_b) is not None

# --- spawned primitives on b1 ------------------------------------------------
emit("sketch_op", "b", {"op": "spawn", "board": "b1", "shape": "cube",
                        "center": [0.25, 0.25, 0.125], "size": [0.25, 0.25, 0.25],
                        "color": [0.8, 0.2, 0.2]}, 13)
sk_cube = f"sk{seq}"
emit("sketch_op", "b", {"op": "spawn", "board": "b1", "shape": "sphere",
                        "center": [-0.5, 0.0, 0.25], "size": [0.2, 0.2, 0.2],
                        "color": [0.2, 0.8, 0.3]}, 13)
emit("sketch_op", "b", {"op": "spawn", "board": "b1", "shape": "cylinder",
                        "center": [0.5, -0.25, 0.25], "size": [0.2, 0.4, 0.2],
                        "color": [0.3, 0.3, 0.9]}, 13)

probe("sketch_op", "b", {"op": "spawn", "board": "h_b", "shape": "cube",
                         "center": [0.0, 0.0, 0.1], "size": [0.1, 0.1, 0.1],
                         "color": [0.5, 0.5, 0.5]}, "bad_board")
probe("sketch_op", "b", {"op": "spawn", "board": "nope", "shape": "cube",
                         "center": [0.0, 0.0, 0.1], "size": [0.1, 0.1, 0.1],
                         "color": [0.5, 0.5, 0.5]}, "unknown_board")
probe("sketch_op", "b", {"op": "spawn", "board": "b1", "shape": "cube",
                         "center": [0.0, 0.0, 0.1], "size": [0.1, 0.1, 0.1],
                         "color": [2.0, 0.5, 0.5]}, "bad_color")
probe("stroke_begin", "a", {"board": "h_a", "color": [0.0, 0.0, 0.0], "width": 0.01},
      "bad_board")

# --- pie-menu gestures on sk_a: move, then scale, then rotate (chained) -----
emit("avatar_update", "a", avatar_payload(-0.5, 1.7, 0.25, 0.6, 0.0, 0.8), 14)

probe("sketch_op", "a", {"op": "select",
                         "ray": {"origin": [0.0, 1.5, 0.0], "dir": [0.0, 0.0, 2.0]}},
      "bad_ray")
probe("sketch_op", "a", {"op": "choose", "slot": "move",
                         "hand": pose(0, 1.5, 0, 0, 0, 1)}, "not_selected")
probe("sketch_op", "a", {"op": "update", "hand": pose(0, 1.5, 0, 0, 0, 1)},
      "not_active")

emit("sketch_op", "a", {"op": "select",
                        "ray": {"origin": [0.0, 1.5, 0.0], "dir": [0.0, 0.0, 1.0]}}, 14)
assert selected("a") == sk_a

c0 = bbox_center_local("b0", sk_a)
emit("sketch_op", "a", {"op": "choose", "slot": "move",
                        "hand": board_local_pose("b0", c0.x + 0.5, c0.y + 0.25, 0.0)}, 15)

probe("sketch_op", "a", {"op": "select",
                         "ray": {"origin": [0.0, 1.5, 0.0], "dir": [0.0, 0.0, 1.0]}},
      "op_active")
probe("sketch_op", "b", {"op": "update", "hand": pose(0, 1.5, 0, 0, 0, 1)},
      "not_active")

emit("sketch_op", "a", {"op": "update",
                        "hand": board_local_pose("b0", c0.x + 0.4, c0.y + 0.3, 0.0)}, 15)
emit("sketch_op", "a", {"op": "update",
                        "hand": board_local_pose("b0", c0.x + 0.3, c0.y + 0.35, 0.0)}, 15)
emit("sketch_op", "a", IDENT, 16)
assert selected("a") == sk_a  # chaining: selection retained after commit

c1 = bbox_center_local("b0", sk_a)
emit("sketch_op", "a", {"op": "choose", "slot": "scale",
                        "hand": board_local_pose("b0", c1.x + 0.5, c1.y + 0.25, 0.0)}, 16)
emit("sketch_op", "a", {"op": "update",
                        "hand": board_local_pose("b0", c1.x + 1.0, c1.y + 0.5, 0.0)}, 16)
emit("sketch_op", "a", IDENT, 17)

c2 = bbox_center_local("b0", sk_a)
emit("sketch_op", "a", {"op": "choose", "slot": "rotate",
                        "hand": board_local_pose("b0", c2.x + 0.5, c2.y + 0.25, 0.0)}, 17)
if FREE_ANGLES:
    # arbitrary sweep angles: exercises atan2/cos/sin on inputs where libm
    # implementations may differ by an ulp -- compared under tolerance
    emit("sketch_op", "a", {"op": "update",
                            "hand": board_local_pose("b0", c2.x + 0.3, c2.y + 0.1, -0.2)},
         17)
    emit("sketch_op", "a", {"op": "update",
                            "hand": board_local_pose("b0", c2.x - 0.1, c2.y + 0.2, -0.45)},
         17)
else:
    # quarter-turn sweep: yaw goes -0.0 -> pi/2 exactly
    emit("sketch_op", "a", {"op": "update",
                            "hand": board_local_pose("b0", c2.x, c2.y + 0.2, -0.5)}, 17)
emit("sketch_op", "a", IDENT, 18)

# --- copy sk_b, then delete the copy ----------------------------------------
wc = bbox_center_world("b0", sk_b)
emit("sketch_op", "a", {"op": "select",
                        "ray": {"origin": [wc.x, wc.y, 0.0], "dir": [0.0, 0.0, 1.0]}}, 18)
assert selected("a") == sk_b

c3 = bbox_center_local("b0", sk_b)
emit("sketch_op", "a", {"op": "choose", "slot": "copy",
                        "hand": board_local_pose("b0", c3.x + 0.5, c3.y + 0.25, 0.0)}, 19)
emit("sketch_op", "a", {"op": "update",
                        "hand": board_local_pose("b0", c3.x + 0.25, c3.y + 0.125, 0.125)},
     19)
emit("sketch_op", "a", IDENT, 19)
sk_copy = f"sk{seq}"
assert state.board("b0").sketch(sk_copy) is not None

wc = bbox_center_world("b0", sk_copy)
emit("sketch_op", "a", {"op": "select",
                        "ray": {"origin": [wc.x, wc.y, 0.0], "dir": [0.0, 0.0, 1.0]}}, 20)
assert selected("a") == sk_copy
emit("sketch_op", "a", {"op": "choose", "slot": "delete",
                        "hand": pose(0, 1.5, 0, 0, 0, 1)}, 20)
assert state.board("b0").sketch(sk_copy) is None
assert state.selections["a"].mode == "idle"

# --- configurations and telepathy --------------------------------------------
emit("config_switch", "b", {"config": "eyes_free"}, 21)
emit("telepathy_set", "a", {"observee": "b", "mode": "windowed"}, 21)
emit("telepathy_set", "b", {"observee": "a", "mode": "immersive_third"}, 21)

probe("telepathy_set", "a", {"observee": "a", "mode": "windowed"}, "self_observe")
probe("telepathy_set", "a", {"observee": "ghost", "mode": "windowed"},
      "unknown_avatar")
probe("goodbye", "ghost", {}, "unknown_avatar")

compose_check("a")
compose_check("b")

emit("config_switch", "a", {"config": "side_by_side"}, 22)
compose_check("a")
compose_check("b")

emit("config_switch", "a", {"config": "mirrored"}, 22)
compose_check("a")
compose_check("b")

# --- gaze hysteresis: a turns toward b1; flips after ten evaluations ---------
for i in range(12):
    emit("avatar_update", "a", avatar_payload(0.0, 1.6, 0.5, 1.0, 0.0, 0.0), 23)
assert state.avatars["a"].gaze_board == "b1"
compose_check("a")
compose_check("b")

# --- departure and a late unicode joiner -------------------------------------
emit("telepathy_set", "b", {"observee": None, "mode": "windowed"}, 24)
emit("goodbye", "b", {}, 24)
assert "b" not in state.avatars and state.board("h_b") is None
assert state.locks["b0"].holder is None  # token released on departure

emit("hello", "c", {"name": "Chloé \U0001f58c"}, 25)
emit("avatar_update", "c", avatar_payload(0.4, 1.6, 0.5, 0.6, 0.0, 0.8), 26)

# c draws right next to the cube while its merge window is still open:
# the stroke folds into the spawned sketch
emit("draw_request", "c", {"board": "b1"}, 26)
emit("draw_grant", "relay", {"board": "b1", "holder": "c"}, 26)
emit("stroke_begin", "c", {"board": "b1", "color": [0.9, 0.6, 0.1], "width": 0.015}, 26)
emit("stroke_points", "c",
     {"board": "b1", "points": [[0.4, 0.4, 0.0], [0.45, 0.45, 0.0]]}, 26)
emit("stroke_end", "c", {"board": "b1"}, 26)
assert len(state.board("b1").sketch(sk_cube).strokes) == 1, "expected prim merge"
emit("draw_release", "c", {"board": "b1"}, 27)

compose_check("a")
compose_check("c")

print(json.dumps({
    "init_config": "side_by_side",
    "init": canonical_json(new_session(2, "side_by_side", 20).to_dict()),
    "steps": steps,
    "final_digest": digest(state.to_dict()),
    "final_json": canonical_json(state.to_dict()),
}))
