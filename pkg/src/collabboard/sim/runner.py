"""Scenario execution.

Two transports:

* ``in_process`` — relay core and client replicas in one process on a
  virtual clock.  Messages still pass through the wire codec (encode +
  decode) and are delivered with a fixed one-tick latency, but no
  sockets or wall-clock time are involved, so a scenario's report is
  bit-for-bit reproducible.
* ``socket`` — a real relay server thread plus native TCP clients on
  loopback, scheduled against the wall clock.  Order of arrival is up
  to the kernel, so only end-state properties (convergence, invariants)
  are asserted, not byte-level determinism.

Both end the same way: after the last scripted event and once the wire
is quiet, everyone's replica hash must equal the relay's state hash.
"""

from __future__ import annotations

import threading
import time
from typing import Dict, List, Optional, Tuple

from ..client import ClientError, RelayClient
from ..model import EVENT_KINDS, SessionState, apply_event
from ..protocol import FrameStream, Message, decode, digest, encode
from ..relay import RelayCore
from .checks import run_state_checks
from .scenario import Scenario

DELIVERY_DELAY_TICKS = 1
QUIESCE_TICKS = 2
COMPOSITION_CHECK_EVERY = 25


class _Replica:
    """An in-process client: a frame stream and a reducer replica."""

    def __init__(self, client_id: str):
        self.id = client_id
        self.stream = FrameStream()
        self.state: Optional[SessionState] = None
        self.backlog: List[Message] = []
        self.nack_count = 0
        self.snapshots: List[dict] = []

    def deliver(self, data: bytes) -> None:
        for msg in self.stream.feed(data):
            self._dispatch(msg)

    def _dispatch(self, msg: Message) -> None:
        if msg.kind == "welcome":
            self.state = SessionState.from_dict(msg.payload["state"])
            for queued in self.backlog:
                if queued.seq > self.state.seq:
                    apply_event(self.state, queued)
            self.backlog.clear()
        elif msg.kind == "nack":
            self.nack_count += 1
        elif msg.kind == "snapshot":
            self.snapshots.append(msg.payload["state"])
        elif msg.kind in EVENT_KINDS:
            if self.state is None:
                self.backlog.append(msg)
            elif msg.seq > self.state.seq:
                apply_event(self.state, msg)


def run_scenario(scenario: Scenario, transport: str = "in_process") -> dict:
    if transport == "in_process":
        return _run_in_process(scenario)
    if transport == "socket":
        return _run_socket(scenario)
    raise ValueError(f"unknown transport {transport!r}")


# ---------------------------------------------------------------------------
# Virtual-clock transport
# ---------------------------------------------------------------------------

def _run_in_process(scenario: Scenario) -> dict:
    core = RelayCore(n_boards=scenario.boards, config=scenario.config,
                     tick_hz=scenario.tick_hz)
    replicas: Dict[str, _Replica] = {c["id"]: _Replica(c["id"])
                                     for c in scenario.clients}
    connected: List[str] = []     # delivery order is join order
    gone = set()
    inbox: List[Tuple[int, str, bytes]] = []   # (deliver_at, client, bytes)
    events_at: Dict[int, List[dict]] = {}
    for ev in scenario.events:
        events_at.setdefault(ev["at"], []).append(ev)
    last_event_tick = scenario.max_tick()
    check_failures: Dict[str, List[str]] = {}
    events_sent = 0

    def note_failures(results: Dict[str, dict], tick: int) -> None:
        for name, res in results.items():
            if not res["ok"]:
                bucket = check_failures.setdefault(name, [])
                for v in res["violations"]:
                    if len(bucket) < 10:
                        bucket.append(f"tick {tick}: {v}")

    def route(directives, now: int) -> None:
        for d in directives:
            if d[0] == "broadcast":
                data = encode(d[1])
                for cid in connected:
                    inbox.append((now + DELIVERY_DELAY_TICKS, cid, data))
            elif d[0] == "send":
                _, target, msg = d
                if target in replicas and target not in gone:
                    inbox.append((now + DELIVERY_DELAY_TICKS, target, encode(msg)))
            elif d[0] == "evict":
                gone.add(d[1])
                if d[1] in connected:
                    connected.remove(d[1])

    t = 0
    quiesce_left = None
    while True:
        # 1. deliveries due this tick, in enqueue order
        due = [item for item in inbox if item[0] <= t]
        if due:
            inbox[:] = [item for item in inbox if item[0] > t]
            for _, cid, data in due:
                if cid not in gone:
                    replicas[cid].deliver(data)
        # 2. scripted sends
        for ev in events_at.get(t, ()):
            cid = ev["client"]
            if cid in gone:
                continue
            if ev["kind"] == "disconnect":
                gone.add(cid)
                if cid in connected:
                    connected.remove(cid)
                route(core.drop_client(cid), t)
                events_sent += 1
                continue
            if ev["kind"] == "hello" and cid not in connected:
                connected.append(cid)
            msg, _ = decode(encode(Message(kind=ev["kind"], sender=cid,
                                           payload=ev["payload"])))
            route(core.handle(msg), t)
            events_sent += 1
            if ev["kind"] == "goodbye":
                gone.add(cid)
                if cid in connected:
                    connected.remove(cid)
        # 3. relay tick
        route(core.tick(), t)
        # 4. periodic invariants
        note_failures(run_state_checks(
            core.state,
            include_composition=(t % COMPOSITION_CHECK_EVERY == 0)), t)
        t += 1
        if quiesce_left is None:
            if t > last_event_tick and not inbox and not core.has_pending():
                quiesce_left = QUIESCE_TICKS
        else:
            quiesce_left -= 1
            if quiesce_left <= 0 and not inbox:
                break
        if t > last_event_tick + 10000:
            check_failures.setdefault("runner", []).append("no quiescence")
            break

    final_checks = run_state_checks(core.state, include_composition=True)
    note_failures(final_checks, t)

    relay_hash = core.state.content_hash()
    replica_hashes: Dict[str, Optional[str]] = {}
    converged = True
    for cid in sorted(replicas):
        rep = replicas[cid]
        if cid in gone or rep.state is None:
            replica_hashes[cid] = None
            continue
        replica_hashes[cid] = rep.state.content_hash()
        if replica_hashes[cid] != relay_hash:
            converged = False
    live_replicas = [h for h in replica_hashes.values() if h is not None]

    ok = converged and not check_failures
    return {
        "transport": "in_process",
        "scenario": scenario.name,
        "seed": scenario.seed,
        "boards": scenario.boards,
        "config": scenario.config,
        "tick_hz": scenario.tick_hz,
        "ticks": t,
        "events_scripted": len(scenario.events),
        "events_sent": events_sent,
        "events_applied": len(core.applied),
        "nacks": {cid: replicas[cid].nack_count for cid in sorted(replicas)},
        "relay_hash": relay_hash,
        "replica_hashes": replica_hashes,
        "live_replicas": len(live_replicas),
        "converged": converged,
        "check_failures": {k: v for k, v in sorted(check_failures.items())},
        "ok": ok,
    }


# ---------------------------------------------------------------------------
# Loopback-socket transport
# ---------------------------------------------------------------------------

def _run_socket(scenario: Scenario) -> dict:
    from ..server import RelayServer  # deferred: pulls in selectors machinery

    server = RelayServer("127.0.0.1", 0, n_boards=scenario.boards,
                         config=scenario.config, tick_hz=scenario.tick_hz)
    thread = threading.Thread(target=server.run, name="relay", daemon=True)
    thread.start()
    interval = 1.0 / scenario.tick_hz
    clients: Dict[str, RelayClient] = {}
    names = {c["id"]: c.get("name", c["id"]) for c in scenario.clients}
    gone = set()
    errors: List[str] = []
    events_sent = 0

    def pump_all(duration: float = 0.0) -> None:
        for cl in clients.values():
            try:
                cl.pump(duration / max(1, len(clients)))
            except ClientError:
                pass

    start = time.monotonic()
    try:
        for ev in scenario.events:
            deadline = start + ev["at"] * interval
            while time.monotonic() < deadline:
                pump_all(min(0.01, deadline - time.monotonic()))
            cid = ev["client"]
            if cid in gone:
                continue
            try:
                if ev["kind"] == "hello":
                    cl = RelayClient(server.host, server.port, cid,
                                     name=names.get(cid, cid))
                    clients[cid] = cl
                    cl.join(timeout=10.0)
                elif ev["kind"] == "disconnect":
                    clients[cid].close(polite=False)
                    gone.add(cid)
                elif ev["kind"] == "goodbye":
                    clients[cid].close(polite=True)
                    gone.add(cid)
                elif ev["kind"] == "snapshot":
                    clients[cid].send("snapshot", {})
                else:
                    clients[cid].send(ev["kind"], ev["payload"])
                events_sent += 1
            except (ClientError, OSError) as exc:
                errors.append(f"{cid} {ev['kind']}: {exc}")
        # Quiescence: let the relay flush batched poses and everyone catch up.
        settle_until = time.monotonic() + max(0.3, (QUIESCE_TICKS + 2) * interval)
        while time.monotonic() < settle_until:
            pump_all(0.02)

        observer = RelayClient(server.host, server.port, "observer")
        snapshot = observer.request_snapshot(timeout=10.0)
        observer.close(polite=False)
        relay_hash = digest(snapshot)

        replica_hashes: Dict[str, Optional[str]] = {}
        converged = True
        for cid in sorted(clients):
            cl = clients[cid]
            if cid in gone or cl.state is None:
                replica_hashes[cid] = None
                continue
            cl.pump(0.05)
            replica_hashes[cid] = cl.state_hash()
            if replica_hashes[cid] != relay_hash:
                converged = False
        state = SessionState.from_dict(snapshot)
        final_checks = run_state_checks(state, include_composition=True)
        check_failures = {name: res["violations"]
                          for name, res in final_checks.items() if not res["ok"]}
        if errors:
            check_failures["transport_errors"] = errors[:10]
        ok = converged and not check_failures
        return {
            "transport": "socket",
            "scenario": scenario.name,
            "seed": scenario.seed,
            "boards": scenario.boards,
            "config": scenario.config,
            "tick_hz": scenario.tick_hz,
            "events_scripted": len(scenario.events),
            "events_sent": events_sent,
            "nacks": {cid: len(clients[cid].nacks) for cid in sorted(clients)},
            "relay_hash": relay_hash,
            "replica_hashes": replica_hashes,
            "live_replicas": sum(1 for h in replica_hashes.values()
                                 if h is not None),
            "converged": converged,
            "check_failures": check_failures,
            "ok": ok,
        }
    finally:
        for cl in clients.values():
            cl.close(polite=False)
        server.stop()
        thread.join(timeout=5.0)
        server.close()
