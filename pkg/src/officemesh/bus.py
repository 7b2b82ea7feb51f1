"""The shared communication substrate: a topic-per-performative pub/sub broker.

One broker core is the single ordering point for every publish, which is what
makes transcripts and scenario runs deterministic. Two transports expose it:
in-process sessions (used by the simulation kernel) and newline-delimited JSON
over TCP. Swapping transports changes nothing above this module.

No replay: a subscriber only sees messages published after it subscribed.
Slow subscribers are disconnected when their queue overflows (fail fast).
"""

from __future__ import annotations

import json
import logging
import socket
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable

from . import acl
from .acl import BROADCAST, Envelope, performative_set, topic_for

log = logging.getLogger("officemesh.bus")

FIREHOSE = "/gateway/events"
ACL_TOPICS = tuple(topic_for(p) for p in performative_set())
VALID_TOPICS = frozenset(ACL_TOPICS) | {FIREHOSE}

FILTER_OWN = "own"  # own id + broadcast (the default)
FILTER_ALL = "all"  # monitors: everything on the topic


class BusError(Exception):
    pass


class Forbidden(BusError):
    pass


class StaleMessage(BusError):
    pass


class AlreadySubscribed(BusError):
    pass


class UnknownTopic(BusError):
    pass


class StartupError(BusError):
    pass


class Disconnected(BusError):
    pass


@dataclass(frozen=True)
class Subscription:
    client_id: str
    topic: str
    filter: str


class Session:
    """One client's attachment to the broker. Thread-safe inbox."""

    def __init__(self, broker: "Broker", client_id: str, queue_capacity: int,
                 on_disconnect: Callable[[], None] | None = None):
        self.client_id = client_id
        self._broker = broker
        self._inbox: deque[Envelope] = deque()
        self._capacity = queue_capacity
        self._lock = threading.Lock()
        self._alive = True
        self._on_disconnect = on_disconnect

    # broker-side delivery; returns False on overflow
    def _deliver(self, e: Envelope) -> bool:
        with self._lock:
            if not self._alive:
                return True
            if len(self._inbox) >= self._capacity:
                return False
            self._inbox.append(e)
            return True

    def poll(self) -> Envelope | None:
        with self._lock:
            return self._inbox.popleft() if self._inbox else None

    def pending(self) -> int:
        with self._lock:
            return len(self._inbox)

    @property
    def alive(self) -> bool:
        return self._alive

    def publish(self, e: Envelope) -> dict:
        if not self._alive:
            raise Disconnected(f"{self.client_id} is disconnected")
        return self._broker.publish(self, e)

    def subscribe(self, topic: str, filter: str = FILTER_OWN) -> Subscription:
        return self._broker.subscribe(self, topic, filter)

    def close(self) -> None:
        self._broker.disconnect(self.client_id)


class Broker:
    """Transport-agnostic broker state machine; every call is serialized."""

    def __init__(self, queue_capacity: int = 1024):
        self.queue_capacity = queue_capacity
        self._lock = threading.RLock()
        self._sessions: dict[str, Session] = {}
        self._subs: dict[str, dict[str, str]] = {}  # client -> topic -> filter
        self._last_seq: dict[str, int] = {}
        self._transcript: list[dict] = []
        self._order = 0

    def connect(self, client_id: str,
                on_disconnect: Callable[[], None] | None = None) -> Session:
        with self._lock:
            if client_id in self._sessions:
                raise Forbidden(f"client id {client_id!r} already connected")
            session = Session(self, client_id, self.queue_capacity, on_disconnect)
            self._sessions[client_id] = session
            self._subs[client_id] = {}
            return session

    def disconnect(self, client_id: str) -> None:
        with self._lock:
            session = self._sessions.pop(client_id, None)
            self._subs.pop(client_id, None)
            if session is not None:
                session._alive = False
                if session._on_disconnect:
                    session._on_disconnect()

    def subscribe(self, session: Session, topic: str, filter: str = FILTER_OWN) -> Subscription:
        if topic not in VALID_TOPICS:
            raise UnknownTopic(topic)
        if filter not in (FILTER_OWN, FILTER_ALL):
            raise BusError(f"unknown filter {filter!r}")
        with self._lock:
            subs = self._subs.get(session.client_id)
            if subs is None:
                raise Disconnected(session.client_id)
            if topic in subs:
                raise AlreadySubscribed(f"{session.client_id} already on {topic}")
            subs[topic] = filter
            return Subscription(session.client_id, topic, filter)

    def _matches(self, client_id: str, filter: str, e: Envelope) -> bool:
        if filter == FILTER_ALL:
            return True
        return e.recipient == BROADCAST or e.recipient == client_id

    def publish(self, session: Session, e: Envelope) -> dict:
        acl.validate_envelope(e)
        with self._lock:
            if session.client_id not in self._sessions:
                raise Disconnected(session.client_id)
            if e.sender != session.client_id:
                raise Forbidden(
                    f"session {session.client_id} may not send as {e.sender}"
                )
            last = self._last_seq.get(e.sender, 0)
            if e.seq <= last:
                raise StaleMessage(f"seq {e.seq} <= last accepted {last}")
            self._last_seq[e.sender] = e.seq

            topic = topic_for(e.performative)
            targets: list[str] = []
            taps: list[str] = []
            for client_id, subs in self._subs.items():
                if topic in subs and self._matches(client_id, subs[topic], e):
                    targets.append(client_id)
                if FIREHOSE in subs:
                    taps.append(client_id)
            targets.sort()

            wire = json.loads(acl.encode_envelope(e))
            self._transcript.append(
                {"deliver_to": targets, "envelope": wire, "order": self._order}
            )
            log.debug("t=%s %s/%s %s -> %s deliver_to=%s", e.sim_time,
                      e.performative.value, e.payload.kind.value, e.sender,
                      e.recipient, targets)
            self._order += 1

            # firehose taps observe everything but never appear in the record,
            # so attaching a monitor cannot perturb transcript bytes
            for client_id in targets + [t for t in taps if t not in targets]:
                target = self._sessions.get(client_id)
                if target is None:
                    continue
                if not target._deliver(e):
                    self.disconnect(client_id)
            return {"ack": e.msg_id}

    def transcript(self) -> list[dict]:
        with self._lock:
            return list(self._transcript)

    def append_transcript_record(self, record: dict) -> None:
        """Harness hook for non-envelope records (world snapshots)."""
        with self._lock:
            record = dict(record)
            record["order"] = self._order
            self._order += 1
            self._transcript.append(record)

    def dump_transcript(self, path) -> None:
        with self._lock:
            lines = [
                json.dumps(r, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
                for r in self._transcript
            ]
        with open(path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")


# -- TCP transport -------------------------------------------------------------

_ERROR_TYPES = {
    cls.__name__: cls
    for cls in (Forbidden, StaleMessage, AlreadySubscribed, UnknownTopic, BusError)
}


def _error_line(exc: Exception, ref: str | None) -> bytes:
    obj = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    if ref is not None:
        obj["error"]["ref"] = ref
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode()


class _TcpConnection:
    """Server side of one TCP session: bounded outbox plus a writer thread."""

    def __init__(self, sock: socket.socket, capacity: int):
        self.sock = sock
        self.capacity = capacity
        self.outbox: deque[bytes] = deque()
        self.cond = threading.Condition()
        self.closed = False
        self.writer = threading.Thread(target=self._write_loop, daemon=True)
        self.writer.start()

    def send(self, data: bytes) -> bool:
        with self.cond:
            if self.closed:
                return True
            if len(self.outbox) >= self.capacity:
                return False
            self.outbox.append(data)
            self.cond.notify()
            return True

    def _write_loop(self):
        while True:
            with self.cond:
                while not self.outbox and not self.closed:
                    self.cond.wait()
                if self.closed and not self.outbox:
                    return
                data = self.outbox.popleft()
            try:
                self.sock.sendall(data)
            except OSError:
                self.close()
                return

    def close(self):
        with self.cond:
            if self.closed:
                return
            self.closed = True
            self.cond.notify_all()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class TcpBrokerServer:
    def __init__(self, core: Broker, host: str = "127.0.0.1", port: int = 0):
        self.core = core
        try:
            self._listener = socket.create_server((host, port))
        except OSError as exc:
            raise StartupError(f"cannot listen on {host}:{port}: {exc}") from exc
        self.address = self._listener.getsockname()
        self._accepting = True
        self._threads: list[threading.Thread] = []
        self._conns: list[_TcpConnection] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self):
        while self._accepting:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(sock,), daemon=True)
            self._threads.append(t)
            t.start()

    def _serve(self, sock: socket.socket):
        conn = _TcpConnection(sock, self.core.queue_capacity)
        self._conns.append(conn)
        session: Session | None = None
        reader = sock.makefile("rb")
        try:
            hello_line = reader.readline()
            if not hello_line:
                return
            try:
                hello = json.loads(hello_line)
                client_id = hello["hello"]
                if not isinstance(client_id, str) or not client_id:
                    raise ValueError("empty hello")
            except (ValueError, KeyError, TypeError) as exc:
                conn.send(_error_line(BusError(f"bad hello: {exc}"), None))
                return
            try:
                session = self.core.connect(client_id, on_disconnect=conn.close)
            except Forbidden as exc:
                conn.send(_error_line(exc, client_id))
                return
            conn.send(b'{"ack":"hello"}\n')

            # pump deliveries from the session inbox into the socket
            pump = threading.Thread(
                target=self._pump, args=(session, conn), daemon=True
            )
            pump.start()

            for raw in reader:
                line = raw.strip()
                if not line:
                    continue
                self._handle_line(session, conn, line)
        finally:
            if session is not None:
                self.core.disconnect(session.client_id)
            conn.close()

    def _pump(self, session: Session, conn: _TcpConnection):
        import time

        while session.alive and not conn.closed:
            e = session.poll()
            if e is None:
                time.sleep(0.001)
                continue
            if not conn.send(acl.encode_envelope(e)):
                self.core.disconnect(session.client_id)
                return

    def _handle_line(self, session: Session, conn: _TcpConnection, line: bytes):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            conn.send(_error_line(acl.ParseError(str(exc)), None))
            return
        if isinstance(obj, dict) and "subscribe" in obj:
            topic = obj.get("subscribe")
            filt = obj.get("filter", FILTER_OWN)
            try:
                session.subscribe(topic, filt)
                conn.send(
                    json.dumps({"ack": f"subscribe:{topic}"}).encode() + b"\n"
                )
            except BusError as exc:
                conn.send(_error_line(exc, topic))
            return
        if isinstance(obj, dict) and "ack" in obj:
            return  # client-side acknowledgment; nothing to do
        try:
            e = acl.decode_envelope(line)
        except acl.AclError as exc:
            conn.send(_error_line(exc, None))
            return
        try:
            ack = session.publish(e)
            conn.send(json.dumps(ack, sort_keys=True).encode() + b"\n")
        except (BusError, acl.AclError) as exc:
            conn.send(_error_line(exc, e.msg_id))

    def close(self):
        self._accepting = False
        try:
            self._listener.close()
        except OSError:
            pass
        for conn in self._conns:
            conn.close()


class TcpBusClient:
    """Blocking client speaking the TCP wire protocol; mirrors Session's API."""

    def __init__(self, host: str, port: int, client_id: str, timeout: float = 5.0):
        self.client_id = client_id
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("rb")
        self._inbox: deque[Envelope] = deque()
        self._responses: deque[dict] = deque()
        self._cond = threading.Condition()
        self._closed = False
        self._reader_thread = threading.Thread(target=self._read_loop, daemon=True)
        self._reader_thread.start()
        self._send({"hello": client_id})
        self._await_response()

    def _send(self, obj) -> None:
        data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode() + b"\n"
        self._sock.sendall(data)

    def _read_loop(self):
        for raw in self._reader:
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(obj, dict) and "performative" in obj:
                e = acl.decode_envelope(line)
                with self._cond:
                    self._inbox.append(e)
                    self._cond.notify_all()
            else:
                with self._cond:
                    self._responses.append(obj)
                    self._cond.notify_all()
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def _await_response(self, timeout: float = 5.0) -> dict:
        with self._cond:
            if not self._cond.wait_for(lambda: self._responses or self._closed, timeout):
                raise BusError("timed out waiting for broker response")
            if self._responses:
                obj = self._responses.popleft()
            else:
                raise Disconnected("connection closed")
        if "error" in obj:
            err = obj["error"]
            cls = _ERROR_TYPES.get(err.get("type"), BusError)
            raise cls(err.get("message", ""))
        return obj

    def publish(self, e: Envelope) -> dict:
        self._send(json.loads(acl.encode_envelope(e)))
        return self._await_response()

    def subscribe(self, topic: str, filter: str = FILTER_OWN) -> dict:
        self._send({"subscribe": topic, "filter": filter})
        return self._await_response()

    def poll(self) -> Envelope | None:
        with self._cond:
            return self._inbox.popleft() if self._inbox else None

    def wait_message(self, timeout: float = 5.0) -> Envelope | None:
        with self._cond:
            self._cond.wait_for(lambda: self._inbox or self._closed, timeout)
            return self._inbox.popleft() if self._inbox else None

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass


@dataclass
class BrokerHandle:
    core: Broker
    server: TcpBrokerServer | None = None

    @property
    def address(self):
        return self.server.address if self.server else None

    def shutdown(self, transcript_path=None) -> None:
        if self.server is not None:
            self.server.close()
        if transcript_path is not None:
            self.core.dump_transcript(transcript_path)


def run_broker(config: dict | None = None) -> BrokerHandle:
    """Start a broker per config keys transport / listen_addr / queue_capacity."""
    config = config or {}
    capacity = int(config.get("queue_capacity", 1024))
    core = Broker(queue_capacity=capacity)
    transport = config.get("transport", "inproc")
    if transport == "inproc":
        return BrokerHandle(core)
    if transport == "tcp":
        addr = config.get("listen_addr", "127.0.0.1:0")
        host, _, port = addr.partition(":")
        server = TcpBrokerServer(core, host or "127.0.0.1", int(port or 0))
        return BrokerHandle(core, server)
    raise StartupError(f"unknown transport {transport!r}")
