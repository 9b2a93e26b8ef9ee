"""Scenario files and the seeded scenario generator.

A scenario is JSON::

    {
      "name": "two-pens",
      "boards": 2,
      "config": "side_by_side",
      "tick_hz": 20,
      "clients": [{"id": "a", "name": "Ada"}, ...],
      "events": [
        {"at": 3, "client": "a", "kind": "draw_request",
         "payload": {"board": "b0"}},
        ...
      ]
    }

``at`` is the virtual tick on which the client sends the message.  Events
fire in list order within a tick.  Two pseudo-kinds are understood by the
runner in addition to the wire kinds: ``disconnect`` (socket drop without
goodbye) and ``snapshot`` (ask the relay for its state).

Instead of ``events``, a scenario may carry a ``fuzz`` block::

    {"fuzz": {"clients": 4, "events": 1000, "seed": 7}}

in which case the event list is generated — same seed, same scenario.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .. import geometry as geo
from ..geometry import Pose, Vec3
from ..model import HEAD_HEIGHT, new_session
from ..protocol import CONFIG_KINDS, PIE_SLOTS, PRIMITIVE_SHAPES, TELEPATHY_MODES


@dataclass
class Scenario:
    name: str
    boards: int
    config: str
    tick_hz: int
    clients: List[dict]
    events: List[dict]
    seed: Optional[int] = None

    def max_tick(self) -> int:
        return max((e["at"] for e in self.events), default=0)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "boards": self.boards,
            "config": self.config,
            "tick_hz": self.tick_hz,
            "clients": self.clients,
            "events": self.events,
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d


def load_scenario(path_or_dict, seed_override: Optional[int] = None) -> Scenario:
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        with open(path_or_dict, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    if "fuzz" in raw:
        fz = raw["fuzz"]
        seed = seed_override if seed_override is not None else fz.get("seed", 0)
        return generate_fuzz(
            n_clients=int(fz.get("clients", 4)),
            n_events=int(fz.get("events", 200)),
            seed=int(seed),
            boards=int(raw.get("boards", fz.get("boards", 2))),
            config=raw.get("config", "side_by_side"),
            tick_hz=int(raw.get("tick_hz", 20)),
            name=raw.get("name", "fuzz"),
        )
    events = sorted(raw["events"], key=lambda e: int(e["at"]))
    return Scenario(
        name=raw.get("name", "scenario"),
        boards=int(raw.get("boards", 1)),
        config=raw.get("config", "side_by_side"),
        tick_hz=int(raw.get("tick_hz", 20)),
        clients=list(raw["clients"]),
        events=[{"at": int(e["at"]), "client": e["client"],
                 "kind": e["kind"], "payload": e.get("payload", {})}
                for e in events],
        seed=seed_override if seed_override is not None else raw.get("seed"),
    )


# ---------------------------------------------------------------------------
# Seeded generator
# ---------------------------------------------------------------------------

class _Walker:
    """A client's wandering head pose, deterministic per seed."""

    def __init__(self, rng: random.Random, index: int):
        self.x = -1.2 + 0.8 * index + rng.uniform(-0.1, 0.1)
        self.z = 0.5 + rng.uniform(-0.2, 0.2)
        self.yaw = rng.uniform(-0.4, 0.4)
        self.pitch = rng.uniform(-0.2, 0.2)

    def step(self, rng: random.Random) -> None:
        self.x += rng.uniform(-0.05, 0.05)
        self.z += rng.uniform(-0.05, 0.05)
        self.yaw += rng.uniform(-0.15, 0.15)
        self.pitch = max(-0.5, min(0.5, self.pitch + rng.uniform(-0.05, 0.05)))

    def head(self) -> Pose:
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        fwd = Vec3(sy * cp, sp, cy * cp)
        return Pose(Vec3(self.x, HEAD_HEIGHT, self.z), geo.look_frame(fwd))

    def pose_payload(self) -> dict:
        head = self.head()
        left = Pose(geo.local_to_world(head, Vec3(-0.25, -0.45, 0.3)), head.frame)
        right = Pose(geo.local_to_world(head, Vec3(0.25, -0.45, 0.3)), head.frame)
        return {"head": head.to_dict(), "left": left.to_dict(),
                "right": right.to_dict()}

    def hand_payload(self, rng: random.Random) -> dict:
        head = self.head()
        off = Vec3(rng.uniform(-0.4, 0.4), rng.uniform(-0.5, 0.1),
                   rng.uniform(0.2, 0.6))
        return Pose(geo.local_to_world(head, off), head.frame).to_dict()


def generate_fuzz(n_clients: int = 4, n_events: int = 200, seed: int = 0,
                  boards: int = 2, config: str = "side_by_side",
                  tick_hz: int = 20, name: str = "fuzz") -> Scenario:
    """A randomized-but-reproducible workload: joins, wandering poses,
    token traffic, stroke bursts, sketch manipulation, configuration and
    telepathy churn, occasional rude disconnects.  Invalid sequences are
    allowed on purpose (they must Nack deterministically, never corrupt)."""
    if n_clients < 1:
        raise ValueError("need at least one client")
    rng = random.Random(seed)
    clients = [{"id": f"c{i}", "name": f"client-{i}"} for i in range(n_clients)]
    board_ids = [b.id for b in new_session(boards).boards]
    walkers = {c["id"]: _Walker(rng, i) for i, c in enumerate(clients)}
    events: List[dict] = []
    gone: set = set()

    def emit(at: int, client: str, kind: str, payload: dict) -> None:
        events.append({"at": at, "client": client, "kind": kind,
                       "payload": payload})

    for i, c in enumerate(clients):
        emit(i, c["id"], "hello", {"name": c["name"]})
    t = n_clients + 1
    produced = len(events)

    while produced < n_events:
        t += rng.choice((0, 0, 0, 1, 1, 2))
        cid = rng.choice(clients)["id"]
        if cid in gone:
            continue
        w = walkers[cid]
        roll = rng.random()
        if roll < 0.34:
            w.step(rng)
            emit(t, cid, "avatar_update", w.pose_payload())
            produced += 1
        elif roll < 0.46:
            emit(t, cid, "draw_request", {"board": rng.choice(board_ids)})
            produced += 1
        elif roll < 0.54:
            emit(t, cid, "draw_release", {"board": rng.choice(board_ids)})
            produced += 1
        elif roll < 0.72:
            board = rng.choice(board_ids)
            # A stroke burst: request the pen, draw, release.  The begin may
            # still be denied if someone else holds the token — that is part
            # of the workload.
            emit(t, cid, "draw_request", {"board": board})
            t2 = t + rng.randint(1, 3)
            emit(t2, cid, "stroke_begin", {
                "board": board,
                "color": [round(rng.random(), 3) for _ in range(3)],
                "width": round(rng.uniform(0.001, 0.02), 4),
            })
            n_pts = rng.randint(2, 6)
            base_x = rng.uniform(-0.8, 0.8)
            base_y = rng.uniform(-0.55, 0.55)
            pts = [[round(base_x + rng.uniform(-0.08, 0.08), 4),
                    round(base_y + rng.uniform(-0.08, 0.08), 4),
                    round(rng.uniform(0.0, 0.08), 4)] for _ in range(n_pts)]
            emit(t2 + 1, cid, "stroke_points", {"board": board, "points": pts})
            emit(t2 + 2, cid, "stroke_end", {"board": board})
            if rng.random() < 0.8:
                emit(t2 + 3, cid, "draw_release", {"board": board})
            produced += 5
        elif roll < 0.80:
            board = rng.choice(board_ids)
            emit(t, cid, "sketch_op", {
                "op": "spawn", "board": board,
                "shape": rng.choice(PRIMITIVE_SHAPES),
                "center": [round(rng.uniform(-0.6, 0.6), 3),
                           round(rng.uniform(-0.4, 0.4), 3),
                           round(rng.uniform(0.05, 0.3), 3)],
                "size": [round(rng.uniform(0.05, 0.3), 3)] * 3,
                "color": [round(rng.random(), 3) for _ in range(3)],
            })
            produced += 1
        elif roll < 0.92:
            # Select whatever the gaze ray hits, run one pie operation on it.
            head = w.head()
            target = Vec3(*[rng.uniform(-0.5, 0.5), rng.uniform(1.0, 2.0),
                            rng.uniform(1.5, 2.5)])
            d = (target - head.position).normalized()
            emit(t, cid, "sketch_op", {
                "op": "select",
                "ray": {"origin": head.position.to_list(), "dir": d.to_list()},
            })
            slot = rng.choice(PIE_SLOTS)
            emit(t + 1, cid, "sketch_op",
                 {"op": "choose", "slot": slot, "hand": w.hand_payload(rng)})
            produced += 2
            if slot != "delete":
                for k in range(rng.randint(1, 3)):
                    emit(t + 2 + k, cid, "sketch_op",
                         {"op": "update", "hand": w.hand_payload(rng)})
                    produced += 1
                emit(t + 5, cid, "sketch_op", {"op": "commit"})
                produced += 1
        elif roll < 0.95:
            emit(t, cid, "config_switch",
                 {"config": rng.choice(sorted(CONFIG_KINDS))})
            produced += 1
        elif roll < 0.985:
            other = rng.choice(clients)["id"]
            if rng.random() < 0.25:
                emit(t, cid, "telepathy_set", {"observee": None,
                                               "mode": "windowed"})
            else:
                emit(t, cid, "telepathy_set", {
                    "observee": other,
                    "mode": rng.choice(sorted(TELEPATHY_MODES)),
                })
            produced += 1
        else:
            # Exercise departures, but keep most replicas around so the
            # final convergence comparison has teeth.
            if len(gone) < min(2, n_clients - 2) and rng.random() < 0.5:
                kind = "goodbye" if rng.random() < 0.5 else "disconnect"
                emit(t, cid, kind, {})
                gone.add(cid)
                produced += 1

    events.sort(key=lambda e: e["at"])
    return Scenario(name=name, boards=boards, config=config, tick_hz=tick_hz,
                    clients=clients, events=events, seed=seed)
