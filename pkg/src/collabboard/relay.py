"""Transport-agnostic relay core.

The relay owns the authoritative :class:`~collabboard.model.SessionState`
and the event sequence.  Every inbound client message goes through
:meth:`RelayCore.handle`; once per tick the server calls
:meth:`RelayCore.tick`.  Both return *directives* — plain tuples telling
the transport layer what to put on the wire:

* ``("broadcast", message)`` — deliver to every joined client,
* ``("send", client_id, message)`` — deliver to one client,
* ``("evict", client_id)`` — drop the client's connection.

Keeping the core free of sockets makes the relay drivable from the
deterministic simulator with a virtual clock, and from the real
selector loop, with identical behavior.

Rules enforced here rather than in the reducer:

* sequence numbers and ticks are stamped by the relay, never by clients;
* `avatar_update` is batched — only the latest pose per client is applied,
  at the tick boundary, in first-arrival order;
* invalid events produce a Nack to the sender and no state change;
* whenever a draw token is free and wanted, the relay emits the
  authoritative `draw_grant` event (FIFO);
* clients silent for :data:`EVICT_SECONDS` are evicted via a synthesized
  `goodbye`.
"""

from __future__ import annotations

import dataclasses
from typing import Dict, List, Optional, Tuple

from .model import EVENT_KINDS, Rejection, SessionState, apply_event, new_session, pending_grants
from .protocol import Message

EVICT_SECONDS = 10.0

# Kinds only the relay itself may originate.
RELAY_ONLY_KINDS = frozenset({"draw_grant", "welcome", "nack"})

Directive = Tuple  # ("broadcast", Message) | ("send", str, Message) | ("evict", str)


class RelayCore:
    def __init__(self, n_boards: int = 1, config: str = "side_by_side",
                 tick_hz: int = 20):
        self.state: SessionState = new_session(n_boards, config, tick_hz)
        self.tick_count = 0
        self.applied: List[Message] = []
        self._pending_avatar: Dict[str, Message] = {}
        self._last_seen: Dict[str, int] = {}
        self._evict_after = int(EVICT_SECONDS * tick_hz)
        self.on_applied = None  # optional hook: called with each applied Message

    # -- internals -----------------------------------------------------------

    def _stamp(self, msg: Message) -> Message:
        return dataclasses.replace(msg, seq=self.state.seq + 1, tick=self.tick_count)

    def _apply(self, msg: Message) -> None:
        apply_event(self.state, msg)
        self.applied.append(msg)
        if self.on_applied is not None:
            self.on_applied(msg)

    def make_nack(self, to: str, code: str, detail: str, of_kind: str) -> Directive:
        return self._nack(to, code, detail, of_kind)

    def _nack(self, to: str, code: str, detail: str, of_kind: str) -> Directive:
        return ("send", to, Message(
            kind="nack", sender="",
            payload={"code": code, "detail": detail, "of_kind": of_kind},
            seq=0, tick=self.tick_count,
        ))

    def _snapshot_msg(self) -> Message:
        return Message(kind="snapshot", sender="",
                       payload={"state": self.state.to_dict()},
                       seq=self.state.seq, tick=self.tick_count)

    def _drain_grants(self) -> List[Directive]:
        out: List[Directive] = []
        due = pending_grants(self.state)
        while due:
            for board_id, holder in due:
                grant = Message(kind="draw_grant", sender="",
                                payload={"board": board_id, "holder": holder},
                                seq=self.state.seq + 1, tick=self.tick_count)
                self._apply(grant)
                out.append(("broadcast", grant))
            due = pending_grants(self.state)
        return out

    def _sequence_and_apply(self, msg: Message) -> List[Directive]:
        stamped = self._stamp(msg)
        try:
            self._apply(stamped)
        except Rejection as rej:
            return [self._nack(msg.sender, rej.code, rej.detail, msg.kind)]
        out: List[Directive] = [("broadcast", stamped)]
        if stamped.kind == "hello":
            out.append(("send", stamped.sender, Message(
                kind="welcome", sender="",
                payload={"state": self.state.to_dict()},
                seq=self.state.seq, tick=self.tick_count,
            )))
        out.extend(self._drain_grants())
        return out

    # -- public API ------------------------------------------------------------

    def handle(self, msg: Message) -> List[Directive]:
        """Process one inbound client message; returns wire directives."""
        if msg.sender:
            self._last_seen[msg.sender] = self.tick_count
        if msg.kind == "heartbeat":
            return []
        if msg.kind == "snapshot":
            if msg.payload:
                return [self._nack(msg.sender, "not_allowed",
                                   "snapshot bodies come from the relay", msg.kind)]
            return [("send", msg.sender, self._snapshot_msg())]
        if msg.kind in RELAY_ONLY_KINDS:
            return [self._nack(msg.sender, "not_allowed",
                               f"{msg.kind} is relay-originated", msg.kind)]
        if msg.kind == "avatar_update":
            # Latest pose wins; applied at the next tick, in the order the
            # senders first showed up this tick (dict insertion order).
            self._pending_avatar[msg.sender] = msg
            return []
        if msg.kind in EVENT_KINDS:
            return self._sequence_and_apply(msg)
        return [self._nack(msg.sender, "unknown_kind", msg.kind, msg.kind)]

    def tick(self) -> List[Directive]:
        """Advance the relay clock: flush batched poses, evict the silent."""
        self.tick_count += 1
        out: List[Directive] = []
        for sender in list(self._pending_avatar):
            msg = self._pending_avatar.pop(sender)
            if sender not in self.state.avatars:
                continue  # left before the flush
            out.extend(self._sequence_and_apply(msg))
        for avatar_id in sorted(self.state.avatars):
            seen = self._last_seen.get(avatar_id, self.tick_count)
            if self.tick_count - seen > self._evict_after:
                out.extend(self.drop_client(avatar_id))
                out.append(("evict", avatar_id))
        return out

    def has_pending(self) -> bool:
        """True while batched avatar updates await the next tick."""
        return bool(self._pending_avatar)

    def drop_client(self, avatar_id: str) -> List[Directive]:
        """Synthesize a goodbye for a vanished client (EOF or eviction)."""
        self._last_seen.pop(avatar_id, None)
        self._pending_avatar.pop(avatar_id, None)
        if avatar_id not in self.state.avatars:
            return []
        goodbye = Message(kind="goodbye", sender=avatar_id, payload={},
                          seq=self.state.seq + 1, tick=self.tick_count)
        self._apply(goodbye)
        out: List[Directive] = [("broadcast", goodbye)]
        out.extend(self._drain_grants())
        return out
