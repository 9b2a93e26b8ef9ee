"""Relay server: one port, two transports, one event loop.

A single selector thread accepts connections and sniffs the first bytes:
an HTTP ``GET`` starts a WebSocket upgrade (browser clients), anything
else is treated as a raw TCP stream of length-prefixed frames (native
and test clients).  Both transports carry identical frame bytes — a
WebSocket binary message payload is exactly the bytes a TCP client
would write — so the framing layer below (`protocol.FrameStream`) is
shared.

The WebSocket side implements the server half of RFC 6455 directly
(handshake, masking, ping/pong, close); only binary frames may carry
protocol data.

Run via the ``relay`` console script::

    relay --listen 127.0.0.1:8765 --boards 2 --config side_by_side \
          --tick-hz 20 --log events.jsonl

Each flag also honors an environment variable (COLLAB_LISTEN,
COLLAB_BOARDS, COLLAB_CONFIG, COLLAB_TICK_HZ, COLLAB_LOG).
"""

from __future__ import annotations

import argparse
import base64
import hashlib
import os
import selectors
import socket
import struct
import sys
import time
from typing import Dict, Optional

from .protocol import (
    CONFIG_KINDS,
    FrameStream,
    Message,
    ProtocolError,
    canonical_json,
    encode,
)
from .relay import RelayCore

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
RECV_SIZE = 65536
MAX_WS_PAYLOAD = 1 << 24


def _message_body(msg: Message) -> dict:
    return {"kind": msg.kind, "payload": msg.payload, "sender": msg.sender,
            "seq": msg.seq, "tick": msg.tick}


class _Conn:
    """Per-connection transport state."""

    __slots__ = ("sock", "addr", "mode", "pre", "ws_buf", "stream", "outbuf",
                 "avatar_id", "closing")

    def __init__(self, sock: socket.socket, addr):
        self.sock = sock
        self.addr = addr
        self.mode = "sniff"        # sniff | tcp | ws_handshake | ws
        self.pre = bytearray()     # bytes seen before the transport is known
        self.ws_buf = bytearray()  # raw websocket bytes awaiting frame parse
        self.stream = FrameStream()
        self.outbuf = bytearray()
        self.avatar_id: Optional[str] = None
        self.closing = False


def ws_accept_value(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_wrap(payload: bytes) -> bytes:
    """One unmasked binary frame (server to client)."""
    n = len(payload)
    if n < 126:
        header = bytes([0x82, n])
    elif n < 65536:
        header = bytes([0x82, 126]) + struct.pack(">H", n)
    else:
        header = bytes([0x82, 127]) + struct.pack(">Q", n)
    return header + payload


def _ws_control(opcode: int, payload: bytes = b"") -> bytes:
    return bytes([0x80 | opcode, len(payload)]) + payload


def ws_parse(buf: bytearray):
    """Yield (opcode, payload) for each complete frame in *buf*, consuming
    the parsed bytes.  Raises ProtocolError on malformed input."""
    frames = []
    pos = 0
    while True:
        if len(buf) - pos < 2:
            break
        b0, b1 = buf[pos], buf[pos + 1]
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        head = pos + 2
        if length == 126:
            if len(buf) - head < 2:
                break
            length = struct.unpack_from(">H", buf, head)[0]
            head += 2
        elif length == 127:
            if len(buf) - head < 8:
                break
            length = struct.unpack_from(">Q", buf, head)[0]
            head += 8
        if length > MAX_WS_PAYLOAD:
            raise ProtocolError(f"websocket frame of {length} bytes is too large")
        if not masked:
            raise ProtocolError("client websocket frames must be masked")
        if len(buf) - head < 4 + length:
            break
        mask = buf[head:head + 4]
        body = bytearray(buf[head + 4:head + 4 + length])
        for i in range(len(body)):
            body[i] ^= mask[i & 3]
        frames.append((opcode, bytes(body)))
        pos = head + 4 + length
    del buf[:pos]
    return frames


class RelayServer:
    def __init__(self, host: str, port: int, n_boards: int = 1,
                 config: str = "side_by_side", tick_hz: int = 20,
                 log_path: Optional[str] = None):
        self.core = RelayCore(n_boards=n_boards, config=config, tick_hz=tick_hz)
        self.tick_interval = 1.0 / tick_hz
        self.sel = selectors.DefaultSelector()
        self.conns: Dict[socket.socket, _Conn] = {}
        self.by_avatar: Dict[str, _Conn] = {}
        self._log = open(log_path, "a", encoding="utf-8") if log_path else None
        if self._log is not None:
            self.core.on_applied = self._log_event
        self.listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.listener.bind((host, port))
        self.listener.listen(128)
        self.listener.setblocking(False)
        self.sel.register(self.listener, selectors.EVENT_READ)
        self.host, self.port = self.listener.getsockname()[:2]
        self._running = False

    # -- logging ---------------------------------------------------------------

    def _log_event(self, msg: Message) -> None:
        self._log.write(canonical_json(_message_body(msg)) + "\n")
        self._log.flush()

    # -- outbound --------------------------------------------------------------

    def _enqueue(self, conn: _Conn, data: bytes) -> None:
        if conn.closing:
            return
        payload = ws_wrap(data) if conn.mode == "ws" else data
        conn.outbuf += payload
        self._want_write(conn)

    def _want_write(self, conn: _Conn) -> None:
        events = selectors.EVENT_READ
        if conn.outbuf:
            events |= selectors.EVENT_WRITE
        try:
            self.sel.modify(conn.sock, events, conn)
        except KeyError:
            pass

    def _execute(self, directives, origin: Optional[_Conn]) -> None:
        for d in directives:
            if d[0] == "broadcast":
                data = encode(d[1])
                for c in list(self.by_avatar.values()):
                    self._enqueue(c, data)
            elif d[0] == "send":
                _, target, msg = d
                conn = self.by_avatar.get(target)
                if conn is None and origin is not None:
                    conn = origin
                if conn is not None:
                    self._enqueue(conn, encode(msg))
            elif d[0] == "evict":
                conn = self.by_avatar.get(d[1])
                if conn is not None:
                    self._close(conn, synthesize_goodbye=False)

    # -- inbound ---------------------------------------------------------------

    def _on_message(self, conn: _Conn, msg: Message) -> None:
        if conn.avatar_id is not None and msg.sender != conn.avatar_id:
            self._execute([self.core.make_nack(
                conn.avatar_id, "bad_sender",
                f"connection is bound to {conn.avatar_id}", msg.kind)], conn)
            return
        if conn.avatar_id is None and msg.kind not in ("hello", "heartbeat", "snapshot"):
            self._execute([self.core.make_nack(
                msg.sender, "no_hello", "join with hello first", msg.kind)], conn)
            return
        bind = conn.avatar_id is None and msg.kind == "hello"
        directives = self.core.handle(msg)
        if bind and msg.sender in self.core.state.avatars:
            conn.avatar_id = msg.sender
            self.by_avatar[msg.sender] = conn
        self._execute(directives, conn)

    def _feed(self, conn: _Conn, data: bytes) -> None:
        try:
            for msg in conn.stream.feed(data):
                self._on_message(conn, msg)
        except ProtocolError as exc:
            print(f"[relay] protocol error from {conn.addr}: {exc}", file=sys.stderr)
            self._close(conn)

    def _ws_handshake(self, conn: _Conn) -> None:
        end = conn.pre.find(b"\r\n\r\n")
        if end < 0:
            if len(conn.pre) > 16384:
                self._close(conn)
            return
        head = bytes(conn.pre[:end]).decode("latin-1")
        del conn.pre[:end + 4]
        key = None
        for line in head.split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if key is None:
            conn.outbuf += b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n"
            conn.closing = True
            self._want_write(conn)
            return
        conn.outbuf += (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {ws_accept_value(key)}\r\n\r\n"
        ).encode("ascii")
        conn.mode = "ws"
        conn.ws_buf += conn.pre
        conn.pre.clear()
        self._want_write(conn)
        self._ws_frames(conn)

    def _ws_frames(self, conn: _Conn) -> None:
        try:
            frames = ws_parse(conn.ws_buf)
        except ProtocolError as exc:
            print(f"[relay] websocket error from {conn.addr}: {exc}", file=sys.stderr)
            self._close(conn)
            return
        for opcode, payload in frames:
            if opcode in (0x0, 0x2):      # continuation / binary: protocol bytes
                self._feed(conn, payload)
                if conn.sock not in self.conns:
                    return  # closed by a protocol error
            elif opcode == 0x9:            # ping
                conn.outbuf += _ws_control(0xA, payload)
                self._want_write(conn)
            elif opcode == 0xA:            # pong
                continue
            elif opcode == 0x8:            # close
                conn.outbuf += _ws_control(0x8, payload[:125])
                self._want_write(conn)
                self._close(conn, flush_first=True)
                return
            else:                          # text or reserved: not allowed
                self._close(conn)
                return

    def _on_readable(self, conn: _Conn) -> None:
        try:
            data = conn.sock.recv(RECV_SIZE)
        except (ConnectionResetError, OSError):
            data = b""
        if not data:
            self._close(conn)
            return
        if conn.mode == "sniff":
            conn.pre += data
            if len(conn.pre) >= 4:
                if conn.pre[:4] == b"GET ":
                    conn.mode = "ws_handshake"
                    self._ws_handshake(conn)  # the request may be complete already
                else:
                    conn.mode = "tcp"
                    pre = bytes(conn.pre)
                    conn.pre.clear()
                    self._feed(conn, pre)
            return
        if conn.mode == "ws_handshake":
            conn.pre += data
            self._ws_handshake(conn)
        elif conn.mode == "ws":
            conn.ws_buf += data
            self._ws_frames(conn)
        else:
            self._feed(conn, data)

    def _on_writable(self, conn: _Conn) -> None:
        try:
            sent = conn.sock.send(conn.outbuf)
            del conn.outbuf[:sent]
        except (BlockingIOError, InterruptedError):
            return
        except OSError:
            self._close(conn)
            return
        if not conn.outbuf and conn.closing:
            self._close(conn, flush_first=False)
            return
        self._want_write(conn)

    def _close(self, conn: _Conn, synthesize_goodbye: bool = True,
               flush_first: bool = False) -> None:
        if flush_first and conn.outbuf:
            conn.closing = True
            return
        sock = conn.sock
        if sock in self.conns:
            del self.conns[sock]
            try:
                self.sel.unregister(sock)
            except (KeyError, ValueError):
                pass
            try:
                sock.close()
            except OSError:
                pass
            if conn.avatar_id is not None:
                self.by_avatar.pop(conn.avatar_id, None)
                if synthesize_goodbye:
                    self._execute(self.core.drop_client(conn.avatar_id), None)

    # -- loop --------------------------------------------------------------------

    def _accept(self) -> None:
        try:
            sock, addr = self.listener.accept()
        except OSError:
            return
        sock.setblocking(False)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        conn = _Conn(sock, addr)
        self.conns[sock] = conn
        self.sel.register(sock, selectors.EVENT_READ, conn)

    def run(self) -> None:
        self._running = True
        next_tick = time.monotonic() + self.tick_interval
        try:
            while self._running:
                timeout = max(0.0, next_tick - time.monotonic())
                for key, events in self.sel.select(timeout):
                    if key.fileobj is self.listener:
                        self._accept()
                        continue
                    conn = key.data
                    if events & selectors.EVENT_READ:
                        self._on_readable(conn)
                    if events & selectors.EVENT_WRITE and conn.sock in self.conns:
                        self._on_writable(conn)
                now = time.monotonic()
                while now >= next_tick:
                    self._execute(self.core.tick(), None)
                    next_tick += self.tick_interval
        finally:
            self.close()

    def stop(self) -> None:
        self._running = False

    def close(self) -> None:
        for conn in list(self.conns.values()):
            self._close(conn, synthesize_goodbye=False)
        try:
            self.sel.unregister(self.listener)
        except (KeyError, ValueError):
            pass
        self.listener.close()
        self.sel.close()
        if self._log is not None:
            self._log.close()
            self._log = None


def _env(name: str, default):
    return os.environ.get(name, default)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="relay",
        description="Shared-workspace relay server (TCP + WebSocket on one port).",
    )
    parser.add_argument("--listen", default=_env("COLLAB_LISTEN", "127.0.0.1:8765"),
                        metavar="HOST:PORT", help="bind address (port 0 picks one)")
    parser.add_argument("--boards", type=int,
                        default=int(_env("COLLAB_BOARDS", "1")),
                        help="number of shared vertical boards")
    parser.add_argument("--config", choices=sorted(CONFIG_KINDS),
                        default=_env("COLLAB_CONFIG", "side_by_side"),
                        help="initial spatial configuration")
    parser.add_argument("--tick-hz", type=int,
                        default=int(_env("COLLAB_TICK_HZ", "20")),
                        help="relay tick rate")
    parser.add_argument("--log", default=_env("COLLAB_LOG", None),
                        help="append applied events as JSON lines to this file")
    args = parser.parse_args(argv)

    host, _, port_s = args.listen.rpartition(":")
    if not host:
        parser.error("--listen must be HOST:PORT")
    try:
        port = int(port_s)
    except ValueError:
        parser.error(f"bad port {port_s!r}")
    if args.boards < 1:
        parser.error("--boards must be >= 1")
    if args.tick_hz < 1:
        parser.error("--tick-hz must be >= 1")

    server = RelayServer(host, port, n_boards=args.boards, config=args.config,
                         tick_hz=args.tick_hz, log_path=args.log)
    print(f"listening on {server.host}:{server.port}", flush=True)
    try:
        server.run()
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
