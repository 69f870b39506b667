"""Topic-based publish/subscribe bus over TCP.

Wire format, fixed so independent implementations interoperate:

    +----------------+------+-----------+-------------+---------+
    | payload length | kind | topic len | topic bytes | payload |
    |  4B big-endian |  1B  |  2B BE    |   UTF-8     |  bytes  |
    +----------------+------+-----------+-------------+---------+

Kind byte: Subscribe=1, Publish=2, Deliver=3, Ack=4, Error=5. Subscribe and
Ack carry no payload; Error carries a JSON {"error": ...} payload. The broker
answers every Subscribe/Publish with exactly one Ack (or Error) in request
order, so clients correlate FIFO; frame ids are bookkeeping local to each
endpoint and never hit the wire.

Semantics: at-most-once, no retention, fan-out to current subscribers in
publish order per publishing connection. Payload bytes pass through untouched;
decoding is the consumer's concern.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import struct
import threading
from dataclasses import dataclass
from enum import IntEnum

from .errors import BrokerError, MalformedMessage, NotConnected

log = logging.getLogger(__name__)

MAX_PAYLOAD = 1 << 20  # 1 MiB
_HEADER = struct.Struct(">IBH")


class FrameKind(IntEnum):
    SUBSCRIBE = 1
    PUBLISH = 2
    DELIVER = 3
    ACK = 4
    ERROR = 5


@dataclass(frozen=True)
class BusFrame:
    kind: FrameKind
    topic: str
    payload: bytes = b""
    frame_id: int = 0  # local correlation only, never serialized


def validate_topic(name: str) -> str:
    if not name:
        raise MalformedMessage("topic must be nonempty")
    if any(ch in name for ch in "*#"):
        raise MalformedMessage(f"wildcards are not supported: {name!r}")
    if any(not segment for segment in name.split("/")):
        raise MalformedMessage(f"empty topic segment: {name!r}")
    return name


def encode_frame(frame: BusFrame) -> bytes:
    topic_bytes = frame.topic.encode("utf-8")
    if len(topic_bytes) > 0xFFFF:
        raise MalformedMessage("topic too long")
    if len(frame.payload) > MAX_PAYLOAD:
        raise MalformedMessage("payload too large")
    header = _HEADER.pack(len(frame.payload), int(frame.kind), len(topic_bytes))
    return header + topic_bytes + frame.payload


def _recv_exactly(sock: socket.socket, n: int) -> bytes | None:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> BusFrame | None:
    """One frame off the socket, or None on orderly EOF."""
    header = _recv_exactly(sock, _HEADER.size)
    if header is None:
        return None
    payload_len, kind_byte, topic_len = _HEADER.unpack(header)
    if payload_len > MAX_PAYLOAD:
        raise MalformedMessage(f"payload length {payload_len} exceeds limit")
    try:
        kind = FrameKind(kind_byte)
    except ValueError:
        raise MalformedMessage(f"unknown frame kind: {kind_byte}")
    topic = b""
    if topic_len:
        topic = _recv_exactly(sock, topic_len)
        if topic is None:
            raise MalformedMessage("connection closed mid-frame")
    payload = b""
    if payload_len:
        payload = _recv_exactly(sock, payload_len)
        if payload is None:
            raise MalformedMessage("connection closed mid-frame")
    return BusFrame(kind, topic.decode("utf-8"), payload)


class _Connection:
    def __init__(self, sock: socket.socket, peer: str):
        self.sock = sock
        self.peer = peer
        self.send_lock = threading.Lock()
        self.alive = True

    def send(self, frame: BusFrame) -> bool:
        data = encode_frame(frame)
        with self.send_lock:
            if not self.alive:
                return False
            try:
                self.sock.sendall(data)
                return True
            except OSError:
                self.alive = False
                return False

    def close(self) -> None:
        with self.send_lock:
            self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class Broker:
    """Accepts clients, routes Publish frames to current topic subscribers."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.host = host
        self.port = port
        self._server: socket.socket | None = None
        self._routes: dict[str, list[_Connection]] = {}
        self._routes_lock = threading.Lock()
        self._connections: set[_Connection] = set()
        self._threads: list[threading.Thread] = []
        self._running = False

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "Broker":
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((self.host, self.port))
        server.listen(64)
        self.port = server.getsockname()[1]
        self._server = server
        self._running = True
        accept_thread = threading.Thread(
            target=self._accept_loop, name="broker-accept", daemon=True
        )
        accept_thread.start()
        self._threads.append(accept_thread)
        log.info("broker listening on %s:%d", self.host, self.port)
        return self

    def serve_forever(self) -> None:
        self.start()
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def stop(self) -> None:
        self._running = False
        if self._server is not None:
            try:
                self._server.close()
            except OSError:
                pass
        for conn in list(self._connections):
            conn.close()

    @property
    def address(self) -> tuple[str, int]:
        return (self.host, self.port)

    # -- internals ----------------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._server is not None
        while self._running:
            try:
                sock, addr = self._server.accept()
            except OSError:
                break
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(sock, f"{addr[0]}:{addr[1]}")
            self._connections.add(conn)
            thread = threading.Thread(
                target=self._client_loop, args=(conn,), name=f"broker-{conn.peer}", daemon=True
            )
            thread.start()
            self._threads.append(thread)

    def _client_loop(self, conn: _Connection) -> None:
        try:
            while self._running:
                try:
                    frame = read_frame(conn.sock)
                except (MalformedMessage, OSError) as exc:
                    if self._running and conn.alive:
                        log.warning("dropping client %s: %s", conn.peer, exc)
                        self._send_error(conn, "", str(exc))
                    break
                if frame is None:
                    break
                self._handle(conn, frame)
        finally:
            self._drop(conn)

    def _handle(self, conn: _Connection, frame: BusFrame) -> None:
        if frame.kind is FrameKind.SUBSCRIBE:
            try:
                topic = validate_topic(frame.topic)
            except MalformedMessage as exc:
                self._send_error(conn, frame.topic, str(exc))
                return
            with self._routes_lock:
                subscribers = self._routes.setdefault(topic, [])
                if conn not in subscribers:
                    subscribers.append(conn)
            conn.send(BusFrame(FrameKind.ACK, topic))
        elif frame.kind is FrameKind.PUBLISH:
            try:
                topic = validate_topic(frame.topic)
            except MalformedMessage as exc:
                self._send_error(conn, frame.topic, str(exc))
                return
            # Ack first, then fan out; no retention for topics without listeners.
            conn.send(BusFrame(FrameKind.ACK, topic))
            with self._routes_lock:
                subscribers = list(self._routes.get(topic, ()))
            deliver = BusFrame(FrameKind.DELIVER, topic, frame.payload)
            for subscriber in subscribers:
                subscriber.send(deliver)
        else:
            self._send_error(conn, frame.topic, f"unexpected frame kind {frame.kind.name}")

    def _send_error(self, conn: _Connection, topic: str, message: str) -> None:
        payload = json.dumps({"error": message}).encode("utf-8")
        conn.send(BusFrame(FrameKind.ERROR, topic, payload))

    def _drop(self, conn: _Connection) -> None:
        conn.close()
        self._connections.discard(conn)
        with self._routes_lock:
            for subscribers in self._routes.values():
                if conn in subscribers:
                    subscribers.remove(conn)


class Subscription:
    """Stream of payloads for one topic; iterable, or poll with get()."""

    _CLOSED = object()

    def __init__(self, topic: str):
        self.topic = topic
        self._queue: queue.Queue = queue.Queue()

    def _push(self, payload: bytes) -> None:
        self._queue.put(payload)

    def _close(self) -> None:
        self._queue.put(self._CLOSED)

    def get(self, timeout: float | None = None) -> bytes:
        item = self._queue.get(timeout=timeout)
        if item is self._CLOSED:
            raise NotConnected("subscription closed")
        return item

    def try_get(self) -> bytes | None:
        try:
            item = self._queue.get_nowait()
        except queue.Empty:
            return None
        if item is self._CLOSED:
            raise NotConnected("subscription closed")
        return item

    def __iter__(self):
        while True:
            try:
                yield self.get()
            except NotConnected:
                return


class BusClient:
    """One connection to the broker; thread-safe publish and subscribe."""

    def __init__(self, host: str, port: int, *, ack_timeout_s: float = 5.0):
        self.host = host
        self.port = port
        self.ack_timeout_s = ack_timeout_s
        self._sock: socket.socket | None = None
        self._subscriptions: dict[str, Subscription] = {}
        self._pending: queue.Queue = queue.Queue()
        self._send_lock = threading.Lock()
        self._frame_counter = 0
        self._reader: threading.Thread | None = None
        self._closed = threading.Event()

    def connect(self) -> "BusClient":
        sock = socket.create_connection((self.host, self.port), timeout=10.0)
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock
        self._reader = threading.Thread(
            target=self._read_loop, name=f"bus-client-{self.host}:{self.port}", daemon=True
        )
        self._reader.start()
        return self

    @property
    def connected(self) -> bool:
        return self._sock is not None and not self._closed.is_set()

    def close(self) -> None:
        self._closed.set()
        if self._sock is not None:
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()
        for sub in self._subscriptions.values():
            sub._close()

    # -- requests -----------------------------------------------------------

    def _request(self, frame: BusFrame) -> None:
        if not self.connected:
            raise NotConnected("client is not connected")
        waiter: queue.Queue = queue.Queue()
        with self._send_lock:
            self._frame_counter += 1
            self._pending.put(waiter)
            try:
                self._sock.sendall(encode_frame(frame))
            except OSError as exc:
                self._closed.set()
                raise NotConnected(f"send failed: {exc}") from exc
        try:
            reply = waiter.get(timeout=self.ack_timeout_s)
        except queue.Empty:
            raise BrokerError(f"no ack for {frame.kind.name} on {frame.topic!r}")
        if isinstance(reply, BusFrame) and reply.kind is FrameKind.ERROR:
            try:
                message = json.loads(reply.payload.decode("utf-8")).get("error", "")
            except (ValueError, UnicodeDecodeError):
                message = repr(reply.payload)
            raise BrokerError(message)
        if reply is Subscription._CLOSED:
            raise NotConnected("connection closed while awaiting ack")

    def publish(self, topic: str, payload: bytes) -> None:
        validate_topic(topic)
        self._request(BusFrame(FrameKind.PUBLISH, topic, payload))

    def subscribe(self, topic: str) -> Subscription:
        validate_topic(topic)
        if topic in self._subscriptions:
            return self._subscriptions[topic]
        sub = Subscription(topic)
        self._subscriptions[topic] = sub
        self._request(BusFrame(FrameKind.SUBSCRIBE, topic))
        return sub

    # -- reader -------------------------------------------------------------

    def _read_loop(self) -> None:
        assert self._sock is not None
        try:
            while not self._closed.is_set():
                frame = read_frame(self._sock)
                if frame is None:
                    break
                if frame.kind is FrameKind.DELIVER:
                    sub = self._subscriptions.get(frame.topic)
                    if sub is not None:
                        sub._push(frame.payload)
                elif frame.kind in (FrameKind.ACK, FrameKind.ERROR):
                    try:
                        waiter = self._pending.get_nowait()
                    except queue.Empty:
                        log.warning("unmatched %s frame", frame.kind.name)
                        continue
                    waiter.put(frame)
        except (OSError, MalformedMessage):
            pass
        finally:
            self._closed.set()
            while True:
                try:
                    waiter = self._pending.get_nowait()
                except queue.Empty:
                    break
                waiter.put(Subscription._CLOSED)
            for sub in self._subscriptions.values():
                sub._close()
