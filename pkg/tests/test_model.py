"""Session model and reducer: joins, tokens, strokes, sketch operations,
gaze tracking, serialization."""

import math

import pytest

from collabboard import geometry as geo
from collabboard.geometry import Pose, Vec3
from collabboard.model import (
    GAZE_STICKY_EVALS,
    Rejection,
    SessionState,
    Sketch3D,
    classify_gaze,
    new_session,
    pending_grants,
    update_gaze,
)
from collabboard.protocol import Message

from helpers import Feeder


def _pose_payload(pose: Pose) -> dict:
    return pose.to_dict()


def _head_at(x: float, z: float, toward: Vec3) -> Pose:
    pos = Vec3(x, 1.6, z)
    fwd = (toward - pos).normalized()
    return Pose(pos, geo.look_frame(fwd))


def _avatar_update_payload(head: Pose) -> dict:
    left = Pose(geo.local_to_world(head, Vec3(-0.25, -0.45, 0.3)), head.frame)
    right = Pose(geo.local_to_world(head, Vec3(0.25, -0.45, 0.3)), head.frame)
    return {"head": head.to_dict(), "left": left.to_dict(),
            "right": right.to_dict()}


class TestSessionSetup:
    def test_new_session_boards_face_inward(self):
        state = new_session(4)
        assert [b.id for b in state.boards] == ["b0", "b1", "b2", "b3"]
        for b in state.boards:
            # outward normal points at the room center
            to_center = (Vec3(0.0, 1.5, 0.0) - b.center()).normalized()
            assert (b.pose.frame.forward - to_center).norm() < 1e-9

    def test_join_creates_avatar_and_private_board(self):
        f = Feeder()
        f.join("ada")
        assert "ada" in f.state.avatars
        av = f.state.avatars["ada"]
        assert av.head.position.y == pytest.approx(1.6)
        private = f.state.board("h_ada")
        assert private is not None
        assert private.kind == "horizontal"
        assert private.owner == "ada"
        # table sits at table height with its normal straight up
        assert private.pose.position.y == pytest.approx(0.95)
        assert (private.pose.frame.forward - Vec3(0.0, 1.0, 0.0)).norm() < 1e-12

    def test_spawn_row_spacing(self):
        f = Feeder()
        f.join("a", "b", "c", "d")
        xs = [f.state.avatars[k].head.position.x for k in ("a", "b", "c", "d")]
        gaps = [xs[i + 1] - xs[i] for i in range(3)]
        assert all(abs(abs(g) - 0.8) < 1e-9 for g in gaps)
        # 1.5 m from the first board's plane
        b0 = f.state.board("b0")
        for k in ("a", "b", "c", "d"):
            d = abs(b0.plane().signed_distance(f.state.avatars[k].head.position))
            assert d == pytest.approx(1.5, abs=1e-9)

    def test_duplicate_hello_rejected(self):
        f = Feeder()
        f.join("ada")
        with pytest.raises(Rejection) as e:
            f.apply("hello", "ada", {"name": "Imposter"})
        assert e.value.code == "duplicate_id"

    def test_goodbye_cleans_up(self):
        f = Feeder()
        f.join("ada", "brin")
        f.apply("draw_request", "ada", {"board": "b0"})
        f.grant("b0")
        f.apply("telepathy_set", "brin", {"observee": "ada", "mode": "windowed"})
        f.apply("goodbye", "ada")
        assert "ada" not in f.state.avatars
        assert f.state.board("h_ada") is None
        assert f.state.locks["b0"].holder is None
        assert "brin" not in f.state.telepathy  # link target left
        # stale events from the departed client bounce
        with pytest.raises(Rejection):
            f.apply("avatar_update", "ada",
                    _avatar_update_payload(_head_at(0, 0, Vec3(0, 1.5, 2))))

    def test_stale_seq_rejected(self):
        f = Feeder()
        f.join("ada")
        msg = Message(kind="heartbeat", sender="ada", payload={},
                      seq=f.state.seq, tick=0)
        from collabboard.model import apply_event
        with pytest.raises(Rejection) as e:
            apply_event(f.state, msg)
        assert e.value.code in ("stale_seq", "not_an_event")


class TestDrawToken:
    def test_fifo_queue_and_grant(self):
        f = Feeder()
        f.join("a", "b", "c")
        f.apply("draw_request", "a", {"board": "b0"})
        f.apply("draw_request", "b", {"board": "b0"})
        f.apply("draw_request", "c", {"board": "b0"})
        assert pending_grants(f.state) == [("b0", "a")]
        f.grant("b0")
        token = f.state.locks["b0"]
        assert token.holder == "a"
        assert token.queue == ["b", "c"]
        # release -> next in line
        f.apply("draw_release", "a", {"board": "b0"})
        assert pending_grants(f.state) == [("b0", "b")]
        f.grant("b0")
        assert f.state.locks["b0"].holder == "b"

    def test_duplicate_request_ignored(self):
        f = Feeder()
        f.join("a")
        f.apply("draw_request", "a", {"board": "b0"})
        f.grant("b0")
        f.apply("draw_request", "a", {"board": "b0"})
        assert f.state.locks["b0"].queue == []

    def test_grant_must_match_queue_head(self):
        f = Feeder()
        f.join("a", "b")
        f.apply("draw_request", "a", {"board": "b0"})
        f.apply("draw_request", "b", {"board": "b0"})
        with pytest.raises(Rejection) as e:
            f.apply("draw_grant", "", {"board": "b0", "holder": "b"})
        assert e.value.code == "bad_grant"

    def test_release_without_holding(self):
        f = Feeder()
        f.join("a")
        with pytest.raises(Rejection) as e:
            f.apply("draw_release", "a", {"board": "b0"})
        assert e.value.code == "not_holder"

    def test_stroke_requires_token(self):
        f = Feeder()
        f.join("a")
        with pytest.raises(Rejection) as e:
            f.apply("stroke_begin", "a",
                    {"board": "b0", "color": [1, 0, 0], "width": 0.004})
        assert e.value.code == "no_lock"

    def test_release_blocked_while_stroke_open(self):
        f = Feeder()
        f.join("a")
        f.apply("draw_request", "a", {"board": "b0"})
        f.grant("b0")
        f.apply("stroke_begin", "a",
                {"board": "b0", "color": [1, 0, 0], "width": 0.004})
        with pytest.raises(Rejection) as e:
            f.apply("draw_release", "a", {"board": "b0"})
        assert e.value.code == "stroke_open"

    def test_holder_departure_frees_token(self):
        f = Feeder()
        f.join("a", "b")
        f.apply("draw_request", "a", {"board": "b0"})
        f.grant("b0")
        f.apply("draw_request", "b", {"board": "b0"})
        f.apply("goodbye", "a")
        assert f.state.locks["b0"].holder is None
        assert pending_grants(f.state) == [("b0", "b")]


def _draw_stroke(f: Feeder, who: str, board: str, points, color=(1.0, 0.0, 0.0),
                 width=0.004):
    f.apply("stroke_begin", who,
            {"board": board, "color": list(color), "width": width})
    f.apply("stroke_points", who,
            {"board": board, "points": [list(p) for p in points]})
    f.apply("stroke_end", who, {"board": board})


class TestStrokes:
    def _ready(self, f: Feeder, who="a", board="b0"):
        f.apply("draw_request", who, {"board": board})
        f.grant(board)

    def test_stroke_becomes_sketch(self):
        f = Feeder()
        f.join("a")
        self._ready(f)
        _draw_stroke(f, "a", "b0", [(-0.2, 0.0, 0.0), (0.2, 0.1, 0.02)])
        board = f.state.board("b0")
        assert len(board.sketches) == 1
        sk = board.sketches[0]
        assert len(sk.strokes) == 1
        assert len(sk.strokes[0].points) == 2
        # pivot froze at the content bbox center
        assert sk.pivot.x == pytest.approx(0.0)
        assert sk.pivot.y == pytest.approx(0.05)

    def test_second_stroke_nearby_and_soon_merges(self):
        f = Feeder(tick_hz=20)
        f.join("a")
        self._ready(f)
        _draw_stroke(f, "a", "b0", [(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)])
        f.advance(10)  # 0.5 s at 20 Hz
        _draw_stroke(f, "a", "b0", [(0.15, 0.02, 0.0), (0.2, 0.05, 0.0)])
        board = f.state.board("b0")
        assert len(board.sketches) == 1
        assert len(board.sketches[0].strokes) == 2

    def test_late_stroke_does_not_merge(self):
        f = Feeder(tick_hz=20)
        f.join("a")
        self._ready(f)
        _draw_stroke(f, "a", "b0", [(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)])
        f.advance(21)  # > 1 s
        _draw_stroke(f, "a", "b0", [(0.15, 0.02, 0.0), (0.2, 0.05, 0.0)])
        assert len(f.state.board("b0").sketches) == 2

    def test_far_stroke_does_not_merge(self):
        f = Feeder(tick_hz=20)
        f.join("a")
        self._ready(f)
        _draw_stroke(f, "a", "b0", [(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)])
        f.advance(2)
        _draw_stroke(f, "a", "b0", [(0.5, 0.5, 0.0), (0.6, 0.5, 0.0)])
        assert len(f.state.board("b0").sketches) == 2

    def test_merge_respects_sketch_transform(self):
        """Points merged into a moved sketch must land where they were
        drawn: the stored content is pre-transform."""
        f = Feeder(tick_hz=20)
        f.join("a")
        self._ready(f)
        _draw_stroke(f, "a", "b0", [(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)])
        sk = f.state.board("b0").sketches[0]
        sk.translation = Vec3(0.05, 0.0, 0.0)  # pretend it was nudged
        drawn = [(0.18, 0.0, 0.0), (0.25, 0.0, 0.0)]
        f.advance(2)
        _draw_stroke(f, "a", "b0", drawn)
        assert len(f.state.board("b0").sketches) == 1
        merged = sk.strokes[-1]
        for raw, p in zip(drawn, merged.points):
            placed = sk.transform_point(p)
            assert (placed - Vec3(*raw)).norm() < 1e-12

    def test_empty_stroke_discarded(self):
        f = Feeder()
        f.join("a")
        self._ready(f)
        f.apply("stroke_begin", "a",
                {"board": "b0", "color": [1, 0, 0], "width": 0.004})
        f.apply("stroke_end", "a", {"board": "b0"})
        assert f.state.board("b0").sketches == []
        assert f.state.open_strokes == {}

    def test_points_require_open_stroke(self):
        f = Feeder()
        f.join("a")
        with pytest.raises(Rejection) as e:
            f.apply("stroke_points", "a",
                    {"board": "b0", "points": [[0, 0, 0]]})
        assert e.value.code == "no_open_stroke"

    def test_no_second_open_stroke_on_same_board(self):
        f = Feeder()
        f.join("a")
        self._ready(f)
        f.apply("stroke_begin", "a",
                {"board": "b0", "color": [1, 0, 0], "width": 0.004})
        with pytest.raises(Rejection) as e:
            f.apply("stroke_begin", "a",
                    {"board": "b0", "color": [0, 1, 0], "width": 0.004})
        assert e.value.code == "stroke_open"

    def test_strokes_only_on_vertical_boards(self):
        f = Feeder()
        f.join("a")
        with pytest.raises(Rejection) as e:
            f.apply("stroke_begin", "a",
                    {"board": "h_a", "color": [1, 0, 0], "width": 0.004})
        assert e.value.code in ("bad_board", "no_lock")


def _select_ray_for(f: Feeder, sketch_id: str):
    """A ray from above-front aimed at the sketch's world bbox center."""
    board, sk = f.state.find_sketch(sketch_id)
    lo, hi = sk.world_bbox(board.pose)
    center = Vec3((lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2)
    origin = Vec3(center.x, center.y + 0.2, center.z - 1.0)
    return {"origin": origin.to_list(),
            "dir": (center - origin).normalized().to_list()}


class TestSketchOps:
    def _sketch(self, f: Feeder, who="a", board="b0") -> str:
        f.apply("draw_request", who, {"board": board})
        f.grant(board)
        _draw_stroke(f, who, board,
                     [(-0.1, -0.1, 0.0), (0.1, -0.1, 0.02), (0.0, 0.1, 0.05)])
        f.apply("draw_release", who, {"board": board})
        return f.state.board(board).sketches[-1].id

    def test_spawn_primitive(self):
        f = Feeder()
        f.join("a")
        f.apply("sketch_op", "a", {
            "op": "spawn", "board": "b0", "shape": "cube",
            "center": [0.0, 0.0, 0.1], "size": [0.2, 0.3, 0.2],
            "color": [0.5, 0.5, 0.5]})
        sk = f.state.board("b0").sketches[0]
        assert sk.primitives[0].shape == "cube"
        lo, hi = sk.local_bbox()
        assert hi.y - lo.y == pytest.approx(0.3)

    def test_select_hits_nearest(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        sel = f.state.selections["a"]
        assert sel.mode == "selected"
        assert sel.sketch_id == sid

    def test_select_miss_clears(self):
        f = Feeder()
        f.join("a")
        self._sketch(f)
        f.apply("sketch_op", "a", {"op": "select", "ray": {
            "origin": [0.0, 1.6, 0.0], "dir": [0.0, -1.0, 0.0]}})
        assert f.state.selections["a"].mode == "idle"

    def test_choose_requires_selection(self):
        f = Feeder()
        f.join("a")
        with pytest.raises(Rejection) as e:
            f.apply("sketch_op", "a", {"op": "choose", "slot": "move",
                                       "hand": _head_at(0, 0, Vec3(0, 1.5, 2)).to_dict()})
        assert e.value.code == "not_selected"

    def test_delete_removes_and_resets_other_selections(self):
        f = Feeder()
        f.join("a", "b")
        sid = self._sketch(f)
        ray = _select_ray_for(f, sid)
        f.apply("sketch_op", "a", {"op": "select", "ray": ray})
        f.apply("sketch_op", "b", {"op": "select", "ray": ray})
        assert f.state.selections["b"].sketch_id == sid
        f.apply("sketch_op", "a", {"op": "choose", "slot": "delete",
                                   "hand": _head_at(0, 0, Vec3(0, 1.5, 2)).to_dict()})
        assert f.state.find_sketch(sid) is None
        assert f.state.selections["a"].mode == "idle"
        assert f.state.selections["b"].mode == "idle"

    def _start_op(self, f: Feeder, who: str, sid: str, slot: str,
                  hand_world: Vec3) -> None:
        f.apply("sketch_op", who, {
            "op": "choose", "slot": slot,
            "hand": Pose(hand_world, geo.IDENTITY_FRAME).to_dict()})

    def test_move_translates_in_board_space(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        board, sk = f.state.find_sketch(sid)
        before = sk.translation
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        h0 = Vec3(0.0, 1.2, 1.0)
        self._start_op(f, "a", sid, "move", h0)
        # move the hand 0.1 m along world +x: board b0 right is -x,
        # so board-local u decreases by 0.1
        h1 = h0 + Vec3(0.1, 0.0, 0.0)
        f.apply("sketch_op", "a",
                {"op": "update", "hand": Pose(h1, geo.IDENTITY_FRAME).to_dict()})
        f.apply("sketch_op", "a", {"op": "commit"})
        delta = sk.translation - before
        assert delta.x == pytest.approx(-0.1, abs=1e-12)
        assert abs(delta.y) < 1e-12 and abs(delta.z) < 1e-12
        # selection survives the commit, pointing at the same sketch
        assert f.state.selections["a"].mode == "selected"
        assert f.state.selections["a"].sketch_id == sid

    def test_move_away_projects_on_gaze_axis(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        # avatar looks straight at the board (+z): pulling the hand +z
        # pushes the sketch away along +z only
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        h0 = Vec3(0.2, 1.3, 0.9)
        self._start_op(f, "a", sid, "move_away", h0)
        h1 = h0 + Vec3(0.3, 0.2, 0.4)  # only the +z part should matter
        f.apply("sketch_op", "a",
                {"op": "update", "hand": Pose(h1, geo.IDENTITY_FRAME).to_dict()})
        board, sk = f.state.find_sketch(sid)
        before = sk.translation
        f.apply("sketch_op", "a", {"op": "commit"})
        delta = sk.translation - before
        # board b0 frame: fwd=-z so board-local z = -(world z); viewer fwd +z
        world_delta = geo.local_to_world_dir(board.pose, delta)
        assert world_delta.x == pytest.approx(0.0, abs=1e-9)
        assert world_delta.y == pytest.approx(0.0, abs=1e-9)
        assert world_delta.z == pytest.approx(0.4, abs=1e-9)

    def test_scale_clamped(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        board, sk = f.state.find_sketch(sid)
        lo, hi = sk.world_bbox(board.pose)
        center = Vec3((lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2)
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        h0 = center + Vec3(0.001, 0.0, 0.0)  # 1 mm from center
        self._start_op(f, "a", sid, "scale", h0)
        h1 = center + Vec3(10.0, 0.0, 0.0)   # 10 m: ratio 10000 -> clamp 100
        f.apply("sketch_op", "a",
                {"op": "update", "hand": Pose(h1, geo.IDENTITY_FRAME).to_dict()})
        f.apply("sketch_op", "a", {"op": "commit"})
        assert sk.scale == pytest.approx(100.0)

    def test_rotate_sweep_angle(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        board, sk = f.state.find_sketch(sid)
        lo, hi = sk.world_bbox(board.pose)
        center = Vec3((lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2)
        c_local = geo.world_to_local(board.pose, center)
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})

        def hand_at(phi: float) -> Vec3:
            # board-local yaw: 0 along +u, growing toward -w
            local = Vec3(c_local.x + 0.3 * math.cos(phi), c_local.y,
                         c_local.z - 0.3 * math.sin(phi))
            return geo.local_to_world(board.pose, local)

        self._start_op(f, "a", sid, "rotate", hand_at(0.0))
        for phi in (0.5, 1.0, 1.5):
            f.apply("sketch_op", "a", {"op": "update",
                                       "hand": Pose(hand_at(phi),
                                                    geo.IDENTITY_FRAME).to_dict()})
        f.apply("sketch_op", "a", {"op": "commit"})
        assert sk.rotation == pytest.approx(1.5, abs=1e-9)

    def test_copy_clones_content_at_offset(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        board, sk = f.state.find_sketch(sid)
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        h0 = Vec3(0.0, 1.2, 1.0)
        self._start_op(f, "a", sid, "copy", h0)
        h1 = h0 + Vec3(-0.3, 0.0, 0.0)  # board-local +0.3 on u (right = -x)
        f.apply("sketch_op", "a",
                {"op": "update", "hand": Pose(h1, geo.IDENTITY_FRAME).to_dict()})
        f.apply("sketch_op", "a", {"op": "commit"})
        sketches = f.state.board("b0").sketches
        assert len(sketches) == 2
        clone = sketches[-1]
        assert clone.id != sid
        assert len(clone.strokes) == len(sk.strokes)
        assert (clone.translation - sk.translation - Vec3(0.3, 0.0, 0.0)).norm() < 1e-9
        # ids of cloned strokes are derived from the clone id
        assert all(s.id.startswith(clone.id) for s in clone.strokes)
        # selection returns to the original
        assert f.state.selections["a"].sketch_id == sid

    def test_update_without_op_rejected(self):
        f = Feeder()
        f.join("a")
        with pytest.raises(Rejection) as e:
            f.apply("sketch_op", "a", {"op": "update",
                                       "hand": _head_at(0, 0, Vec3(0, 1.5, 2)).to_dict()})
        assert e.value.code == "not_active"

    def test_select_during_op_rejected(self):
        f = Feeder()
        f.join("a")
        sid = self._sketch(f)
        f.apply("sketch_op", "a", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        self._start_op(f, "a", sid, "move", Vec3(0.0, 1.2, 1.0))
        with pytest.raises(Rejection) as e:
            f.apply("sketch_op", "a", {"op": "select",
                                       "ray": _select_ray_for(f, sid)})
        assert e.value.code == "op_active"


class TestWorldBbox:
    def test_matches_pointwise_for_strokes(self):
        f = Feeder()
        f.join("a")
        f.apply("draw_request", "a", {"board": "b0"})
        f.grant("b0")
        pts = [(-0.2, 0.1, 0.0), (0.3, -0.2, 0.1), (0.0, 0.4, 0.2)]
        _draw_stroke(f, "a", "b0", pts)
        board, sk = f.state.find_sketch(f.state.board("b0").sketches[0].id)
        sk.translation = Vec3(0.1, -0.05, 0.02)
        sk.rotation = 0.7
        sk.scale = 1.8
        lo, hi = sk.world_bbox(board.pose)
        world_pts = [geo.local_to_world(board.pose, sk.transform_point(Vec3(*p)))
                     for p in pts]
        for i in range(3):
            assert lo[i] == pytest.approx(min(p[i] for p in world_pts), abs=1e-9)
            assert hi[i] == pytest.approx(max(p[i] for p in world_pts), abs=1e-9)

    def test_sphere_extent_exact_under_rotation(self):
        state = new_session(2)  # b1 is rotated 90 degrees
        board = state.board("b1")
        sk = Sketch3D(id="s", board_id="b1")
        from collabboard.model import Primitive
        sk.primitives.append(Primitive(shape="sphere", center=Vec3(0.1, 0.2, 0.0),
                                       size=Vec3(0.4, 0.4, 0.4),
                                       color=(1, 1, 1)))
        sk.scale = 2.0
        lo, hi = sk.world_bbox(board.pose)
        for i in range(3):
            assert hi[i] - lo[i] == pytest.approx(0.8, abs=1e-12)

    def test_empty_sketch_bbox_rejected(self):
        sk = Sketch3D(id="s", board_id="b0")
        state = new_session(1)
        with pytest.raises(Rejection):
            sk.world_bbox(state.board("b0").pose)


class TestGaze:
    def test_classify_picks_board_ray_hits(self):
        state = new_session(2)
        head = _head_at(0.0, 0.5, state.board("b0").center())
        assert classify_gaze(head, state.boards) == "b0"
        head2 = _head_at(0.5, 0.0, state.board("b1").center())
        assert classify_gaze(head2, state.boards) == "b1"

    def test_hysteresis_requires_streak(self):
        f = Feeder(n_boards=2)
        f.join("a")
        av = f.state.avatars["a"]
        assert av.gaze_board == "b0"
        av.head = _head_at(0.5, 0.0, f.state.board("b1").center())
        for i in range(GAZE_STICKY_EVALS - 1):
            update_gaze(av, f.state.boards)
            assert av.gaze_board == "b0", f"flipped after {i + 1} evals"
        # the streak-completing evaluation commits the switch
        update_gaze(av, f.state.boards)
        assert av.gaze_board == "b1"

    def test_streak_resets_on_return(self):
        f = Feeder(n_boards=2)
        f.join("a")
        av = f.state.avatars["a"]
        toward_b0 = _head_at(0.0, 0.5, f.state.board("b0").center())
        toward_b1 = _head_at(0.5, 0.0, f.state.board("b1").center())
        for _ in range(GAZE_STICKY_EVALS - 1):
            av.head = toward_b1
            update_gaze(av, f.state.boards)
        av.head = toward_b0
        update_gaze(av, f.state.boards)
        assert av.gaze_board == "b0"
        assert av.gaze_count == 0
        # the interrupted streak must start over
        av.head = toward_b1
        for _ in range(GAZE_STICKY_EVALS - 1):
            update_gaze(av, f.state.boards)
            assert av.gaze_board == "b0"


class TestSerialization:
    def _busy_state(self) -> SessionState:
        f = Feeder(n_boards=2, config="mirrored")
        f.join("a", "b", "c")
        f.apply("draw_request", "a", {"board": "b0"})
        f.grant("b0")
        f.apply("draw_request", "b", {"board": "b0"})
        _draw_stroke(f, "a", "b0", [(-0.1, 0.0, 0.0), (0.1, 0.0, 0.0)])
        f.apply("sketch_op", "b", {
            "op": "spawn", "board": "b1", "shape": "cylinder",
            "center": [0.0, 0.1, 0.2], "size": [0.1, 0.4, 0.1],
            "color": [0.2, 0.4, 0.6]})
        f.apply("telepathy_set", "c", {"observee": "a", "mode": "immersive_third"})
        f.apply("stroke_begin", "a", {"board": "b0", "color": [0, 0, 1],
                                      "width": 0.01})
        sid = f.state.board("b1").sketches[0].id
        f.apply("sketch_op", "b", {"op": "select",
                                   "ray": _select_ray_for(f, sid)})
        f.apply("sketch_op", "b", {"op": "choose", "slot": "move",
                                   "hand": Pose(Vec3(0, 1.2, 1),
                                                geo.IDENTITY_FRAME).to_dict()})
        return f.state

    def test_round_trip_hash_stable(self):
        state = self._busy_state()
        clone = SessionState.from_dict(state.to_dict())
        assert clone.content_hash() == state.content_hash()
        # and a second generation too
        again = SessionState.from_dict(clone.to_dict())
        assert again.content_hash() == state.content_hash()

    def test_clone_is_deep(self):
        state = self._busy_state()
        clone = state.clone()
        clone.board("b0").sketches[0].translation = Vec3(9.0, 9.0, 9.0)
        assert state.board("b0").sketches[0].translation != Vec3(9.0, 9.0, 9.0)
        assert state.content_hash() != clone.content_hash()
