"""Shared builders for randomized tests: seeded poses, planes, sessions."""

from __future__ import annotations

import math
import random

from collabboard import geometry as geo
from collabboard.geometry import Plane, Pose, Vec3
from collabboard.model import SessionState, apply_event, new_session
from collabboard.protocol import Message


def rand_unit(rng: random.Random) -> Vec3:
    while True:
        v = Vec3(rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
        n = v.norm()
        if n > 1e-6:
            return Vec3(v.x / n, v.y / n, v.z / n)


def rand_point(rng: random.Random, span: float = 5.0) -> Vec3:
    return Vec3(rng.uniform(-span, span), rng.uniform(-span, span),
                rng.uniform(-span, span))


def rand_pose(rng: random.Random, span: float = 5.0) -> Pose:
    fwd = rand_unit(rng)
    up_hint = rand_unit(rng)
    # keep the hint from being parallel to forward
    while abs(fwd.dot(up_hint)) > 0.99:
        up_hint = rand_unit(rng)
    return Pose(rand_point(rng, span), geo.look_frame(fwd, up_hint))


def rand_plane(rng: random.Random, span: float = 5.0) -> Plane:
    return Plane(rand_point(rng, span), rand_unit(rng))


class Feeder:
    """Drives a bare SessionState through sequenced events, the way the
    relay would, for reducer-focused unit tests."""

    def __init__(self, n_boards: int = 1, config: str = "side_by_side",
                 tick_hz: int = 20):
        self.state: SessionState = new_session(n_boards, config, tick_hz)
        self.tick = 0

    def apply(self, kind: str, sender: str, payload: dict | None = None) -> Message:
        msg = Message(kind=kind, sender=sender,
                      payload=payload if payload is not None else {},
                      seq=self.state.seq + 1, tick=self.tick)
        apply_event(self.state, msg)
        return msg

    def join(self, *avatar_ids: str) -> None:
        for aid in avatar_ids:
            self.apply("hello", aid, {"name": aid.title()})

    def grant(self, board: str) -> None:
        """Emit the grant the relay would emit for the queue head."""
        token = self.state.locks[board]
        self.apply("draw_grant", "", {"board": board, "holder": token.queue[0]})

    def advance(self, ticks: int = 1) -> None:
        self.tick += ticks
