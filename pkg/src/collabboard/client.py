"""Minimal native client: a TCP connection plus a local state replica.

The client applies the relay's broadcast events to its own
:class:`~collabboard.model.SessionState` with the same reducer the relay
uses, so after quiescence its state hash matches the relay's and every
other client's.  Used by the simulator's socket transport and by tests;
it is also a reference for writing clients in other languages.
"""

from __future__ import annotations

import select
import socket
import time
from typing import Callable, List, Optional

from .model import EVENT_KINDS, SessionState, apply_event
from .protocol import FrameStream, Message, encode


class ClientError(RuntimeError):
    pass


class RelayClient:
    def __init__(self, host: str, port: int, avatar_id: str,
                 name: Optional[str] = None, connect_timeout: float = 5.0):
        self.avatar_id = avatar_id
        self.name = name if name is not None else avatar_id
        self.state: Optional[SessionState] = None
        self.nacks: List[Message] = []
        self.last_snapshot: Optional[dict] = None
        self.last_tick = 0
        self._stream = FrameStream()
        self._backlog: List[Message] = []  # events seen before the welcome
        self._closed = False
        self.sock = socket.create_connection((host, port), timeout=connect_timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.sock.setblocking(False)

    # -- sending ----------------------------------------------------------------

    def send(self, kind: str, payload: Optional[dict] = None) -> None:
        if self._closed:
            raise ClientError("client is closed")
        msg = Message(kind=kind, sender=self.avatar_id,
                      payload=payload if payload is not None else {})
        view = memoryview(encode(msg))
        while view:
            try:
                sent = self.sock.send(view)
                view = view[sent:]
            except (BlockingIOError, InterruptedError):
                _, writable, _ = select.select([], [self.sock], [], 5.0)
                if not writable:
                    raise ClientError("send stalled") from None

    def join(self, timeout: float = 5.0) -> SessionState:
        """Send hello and wait for the welcome snapshot."""
        self.send("hello", {"name": self.name})
        self.wait_for(lambda: self.state is not None, timeout,
                      "no welcome from relay")
        return self.state

    def request_snapshot(self, timeout: float = 5.0) -> dict:
        before = self.last_snapshot
        self.send("snapshot", {})
        self.wait_for(lambda: self.last_snapshot is not before, timeout,
                      "no snapshot response")
        return self.last_snapshot

    # -- receiving ---------------------------------------------------------------

    def _dispatch(self, msg: Message) -> None:
        self.last_tick = max(self.last_tick, msg.tick)
        if msg.kind == "welcome":
            self.state = SessionState.from_dict(msg.payload["state"])
            for queued in self._backlog:
                if queued.seq > self.state.seq:
                    apply_event(self.state, queued)
            self._backlog.clear()
        elif msg.kind == "nack":
            self.nacks.append(msg)
        elif msg.kind == "snapshot":
            self.last_snapshot = msg.payload["state"]
        elif msg.kind in EVENT_KINDS:
            if self.state is None:
                self._backlog.append(msg)
            elif msg.seq > self.state.seq:
                apply_event(self.state, msg)

    def pump(self, duration: float = 0.0) -> int:
        """Read and apply whatever has arrived; returns messages handled.
        With a duration, keeps reading until that much time has passed."""
        handled = 0
        deadline = time.monotonic() + duration
        while not self._closed:
            try:
                data = self.sock.recv(65536)
                if not data:
                    self._closed = True
                    break
                for msg in self._stream.feed(data):
                    self._dispatch(msg)
                    handled += 1
                continue
            except (BlockingIOError, InterruptedError):
                pass
            except OSError:
                self._closed = True
                break
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            time.sleep(min(0.005, remaining))
        return handled

    def wait_for(self, predicate: Callable[[], bool], timeout: float,
                 what: str = "condition") -> None:
        deadline = time.monotonic() + timeout
        while not predicate():
            if self._closed:
                raise ClientError(f"connection closed while waiting: {what}")
            if time.monotonic() >= deadline:
                raise ClientError(f"timed out waiting: {what}")
            self.pump(0.02)

    # -- convenience ---------------------------------------------------------------

    def state_hash(self) -> str:
        if self.state is None:
            raise ClientError("no state yet (join first)")
        return self.state.content_hash()

    def close(self, polite: bool = True) -> None:
        if self._closed:
            return
        if polite:
            try:
                self.send("goodbye", {})
            except OSError:
                pass
        self._closed = True
        try:
            self.sock.close()
        except OSError:
            pass
