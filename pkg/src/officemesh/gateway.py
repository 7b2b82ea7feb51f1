"""Operator gateway: streams bus traffic to consoles and injects commands.

Transport is plain RFC6455 websockets (text frames only, no extensions),
implemented here directly since the environment provides no websocket
library. Frames wrap JSON as {"dir": "in"|"out", "frame": {...}}; see
docs/gateway.md for the exact schema.

The gateway is a pure tap: it subscribes to the broker firehose (which is
excluded from transcript delivery records) and forwards every envelope, plus
periodic liveness and world frames. Inbound operator commands are queued and
turned into ordinary envelopes from agent id ``operator-console`` at the next
tick boundary, so an attached console never perturbs scheduling.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import socket
import struct
import threading
from collections import deque

from .acl import Envelope, Payload, PayloadKind, Performative, encode_envelope
from .agentkit import LivenessTable, MalformedAdvert
from .bus import FIREHOSE, FILTER_ALL, Broker, StartupError

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OPERATOR_ID = "operator-console"


# -- websocket framing -----------------------------------------------------------

def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


class FrameReader:
    """Buffered frame reads; handshake leftovers are not lost."""

    def __init__(self, sock: socket.socket, leftover: bytes = b""):
        self.sock = sock
        self.buf = leftover

    def _recv_exact(self, n: int) -> bytes:
        while len(self.buf) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("socket closed")
            self.buf += chunk
        out, self.buf = self.buf[:n], self.buf[n:]
        return out

    def read_frame(self) -> tuple[int, bytes]:
        head = self._recv_exact(2)
        opcode = head[0] & 0x0F
        masked = bool(head[1] & 0x80)
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", self._recv_exact(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", self._recv_exact(8))[0]
        mask = self._recv_exact(4) if masked else None
        payload = self._recv_exact(length) if length else b""
        if mask:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return opcode, payload


def ws_write_frame(sock: socket.socket, payload: bytes, opcode: int = 0x1,
                   mask: bool = False) -> None:
    head = bytearray([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0
    if length < 126:
        head.append(mask_bit | length)
    elif length < 1 << 16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", length)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        head += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    sock.sendall(bytes(head) + payload)


def _server_handshake(sock: socket.socket) -> FrameReader | None:
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            return None
        data += chunk
    head, leftover = data.split(b"\r\n\r\n", 1)
    headers = {}
    for line in head.decode("latin-1").split("\r\n")[1:]:
        if ":" in line:
            k, v = line.split(":", 1)
            headers[k.strip().lower()] = v.strip()
    key = headers.get("sec-websocket-key")
    if key is None:
        sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        return None
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {_accept_key(key)}\r\n\r\n"
    )
    sock.sendall(response.encode("latin-1"))
    return FrameReader(sock, leftover)


class WsClient:
    """Small websocket client used by tests and tooling."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode("latin-1"))
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("handshake failed")
            data += chunk
        head, leftover = data.split(b"\r\n\r\n", 1)
        if b"101" not in head.split(b"\r\n", 1)[0]:
            raise ConnectionError(f"handshake rejected: {head[:100]!r}")
        self._reader = FrameReader(self.sock, leftover)

    def send_json(self, obj) -> None:
        ws_write_frame(self.sock, json.dumps(obj).encode(), mask=True)

    def recv_json(self):
        while True:
            opcode, payload = self._reader.read_frame()
            if opcode == 0x1:
                return json.loads(payload.decode())
            if opcode == 0x9:  # ping
                ws_write_frame(self.sock, payload, opcode=0xA, mask=True)
            elif opcode == 0x8:
                raise ConnectionError("closed")

    def close(self) -> None:
        try:
            ws_write_frame(self.sock, b"", opcode=0x8, mask=True)
        except OSError:
            pass
        self.sock.close()


# -- the gateway ------------------------------------------------------------------

class GatewayServer:
    """Bridges one running scenario stack to any number of console clients."""

    def __init__(self, stack, port: int = 0, host: str = "127.0.0.1",
                 liveness_every: int = 5):
        self.stack = stack
        self.liveness_every = liveness_every
        broker: Broker = stack.broker
        self._tap = broker.connect("gateway-tap")
        self._tap.subscribe(FIREHOSE, FILTER_ALL)
        self._operator = broker.connect(OPERATOR_ID)
        self._seq = 0
        self._table = LivenessTable()
        self._commands: deque[dict] = deque()
        self._seen_commands: set[str] = set()
        self._open_queries: set[str] = set()
        self._clients: list[tuple[socket.socket, threading.Lock]] = []
        self._lock = threading.Lock()
        try:
            self._listener = socket.create_server((host, port))
        except OSError as exc:
            raise StartupError(f"gateway cannot listen on {host}:{port}: {exc}") from exc
        self.address = self._listener.getsockname()
        self._accepting = True
        threading.Thread(target=self._accept_loop, daemon=True).start()
        stack.kernel.tick_callbacks.append(self.on_tick)

    # ---- client management

    def _accept_loop(self) -> None:
        while self._accepting:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(sock,), daemon=True).start()

    def _serve_client(self, sock: socket.socket) -> None:
        reader = _server_handshake(sock)
        if reader is None:
            sock.close()
            return
        lock = threading.Lock()
        with self._lock:
            self._clients.append((sock, lock))
        self._send_one(sock, lock, self._snapshot_frame())
        try:
            while True:
                opcode, payload = reader.read_frame()
                if opcode == 0x8:
                    break
                if opcode == 0x9:
                    with lock:
                        ws_write_frame(sock, payload, opcode=0xA)
                    continue
                if opcode != 0x1:
                    continue
                try:
                    obj = json.loads(payload.decode())
                    frame = obj.get("frame", {})
                    if not isinstance(frame, dict) or "cmd" not in frame:
                        raise ValueError("missing cmd")
                except (ValueError, UnicodeDecodeError) as exc:
                    self._send_one(sock, lock, {"type": "error", "message": str(exc)})
                    continue
                self._commands.append(frame)
        except (ConnectionError, OSError):
            pass
        finally:
            with self._lock:
                self._clients = [(s, l) for s, l in self._clients if s is not sock]
            sock.close()

    def _send_one(self, sock, lock, frame: dict) -> None:
        data = json.dumps({"dir": "out", "frame": frame},
                          sort_keys=True, separators=(",", ":")).encode()
        try:
            with lock:
                ws_write_frame(sock, data)
        except OSError:
            pass

    def _broadcast_frame(self, frame: dict) -> None:
        with self._lock:
            clients = list(self._clients)
        for sock, lock in clients:
            self._send_one(sock, lock, frame)

    # ---- frames

    def _liveness_rows(self) -> list[dict]:
        rows = []
        for agent_id, entry in sorted(self._table.entries.items()):
            rows.append(
                {
                    "id": agent_id,
                    "status": entry.status.value,
                    "last_seen": entry.last_seen,
                    "location": entry.advert.location,
                    "schemas": len(entry.advert.schemas),
                }
            )
        return rows

    def _snapshot_frame(self) -> dict:
        m = self.stack.office_map
        return {
            "type": "snapshot",
            "tick": self.stack.clock.now,
            "world": self.stack.world.snapshot(),
            "liveness": self._liveness_rows(),
            "map": {
                "nodes": list(m.nodes),
                "edges": [[*sorted(pair), w] for pair, w in sorted(
                    m.edges.items(), key=lambda kv: sorted(kv[0]))],
            },
        }

    # ---- kernel tick bridge

    def on_tick(self, now: int) -> None:
        while True:
            e = self._tap.poll()
            if e is None:
                break
            self._observe(e, now)
            self._broadcast_frame(
                {"type": "envelope", "envelope": json.loads(encode_envelope(e))}
            )
        while self._commands:
            self._apply_command(self._commands.popleft(), now)
        if self.liveness_every and now % self.liveness_every == 0:
            if self._table.entries:
                try:
                    self._table.sweep(now, 30)
                except ValueError:
                    pass
            self._broadcast_frame(
                {"type": "liveness", "tick": now, "agents": self._liveness_rows()}
            )
            self._broadcast_frame(
                {"type": "world", "tick": now, "snapshot": self.stack.world.snapshot()}
            )

    def _observe(self, e: Envelope, now: int) -> None:
        if e.payload.kind is PayloadKind.CAPABILITY_ADVERT:
            try:
                self._table.record_heartbeat(e, now)
            except MalformedAdvert:
                pass
        elif e.payload.kind is PayloadKind.QUERY_BODY:
            self._open_queries.add(e.conversation_id)
        elif e.payload.kind is PayloadKind.QUERY_ANSWER:
            self._open_queries.discard(e.conversation_id)

    # ---- command translation

    def _publish(self, performative: Performative, kind: PayloadKind,
                 body: dict, recipient: str, conversation_id: str | None = None) -> None:
        self._seq += 1
        e = Envelope(
            msg_id=f"{OPERATOR_ID}#{self._seq}",
            conversation_id=conversation_id or f"{OPERATOR_ID}:{self._seq}",
            performative=performative,
            sender=OPERATOR_ID,
            recipient=recipient,
            payload=Payload(kind, body),
            sim_time=self.stack.clock.now,
            seq=self._seq,
        )
        self._operator.publish(e)

    def _apply_command(self, cmd: dict, now: int) -> None:
        cmd_id = cmd.get("id")
        if cmd_id is not None:
            if cmd_id in self._seen_commands:
                self._broadcast_frame({"type": "ack", "ref": cmd_id, "dedup": True})
                return
            self._seen_commands.add(cmd_id)
        name = cmd.get("cmd")
        try:
            if name == "submit_goal":
                goal = [{"pos": True, "atom": list(a)} for a in cmd["goal"]]
                body = {"goal": goal}
                if cmd.get("mode"):
                    body["mode"] = cmd["mode"]
                self._publish(Performative.REQUEST, PayloadKind.GOAL_SUBMISSION,
                              body, "pr-1")
            elif name == "respond_query":
                conv = cmd["conversation_id"]
                if conv not in self._open_queries:
                    raise KeyError(f"no open query {conv}")
                asker = conv.split(":", 1)[0]
                self._publish(Performative.INFORM, PayloadKind.QUERY_ANSWER,
                              {"answer": cmd["answer"]}, asker, conversation_id=conv)
            elif name == "inject_failure":
                agent, state = cmd["agent"], cmd["state"]
                if agent not in self.stack.world.health:
                    raise KeyError(f"unknown agent {agent}")
                self._publish(Performative.REQUEST, PayloadKind.STATE_UPDATE,
                              {"health": {"agent": agent, "state": state}}, "world-ctl")
            elif name == "set_mode":
                self._publish(Performative.REQUEST, PayloadKind.STATE_UPDATE,
                              {"default_mode": cmd["mode"]}, "pr-1")
            else:
                raise KeyError(f"unknown command {name!r}")
        except (KeyError, TypeError, ValueError) as exc:
            self._broadcast_frame({"type": "error", "message": str(exc), "ref": cmd_id})
            return
        self._broadcast_frame({"type": "ack", "ref": cmd_id})

    def close(self) -> None:
        self._accepting = False
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
            self._clients = []
        for sock, _ in clients:
            sock.close()


def gateway_serve(stack, port: int = 0) -> GatewayServer:
    """Attach a gateway to a running stack; returns the serving instance."""
    return GatewayServer(stack, port=port)
