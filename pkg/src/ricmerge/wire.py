"""Live mode: a simplified E2AP-like wire protocol over TCP.

Three roles exercise the merge engine over real sockets: a broker that
owns the merge state, node emulators that emit KPI indications on
wall-clock timers, and xApp clients that subscribe and consume.

Frame layout: a 4-byte big-endian length (excluding itself), a 1-byte
message kind, then the body. Bodies use the canonical primitives of the
domain model: 8-byte big-endian integers, length-prefixed UTF-8 strings,
and a 1-byte presence flag for optional values. Subscription items carry
an optional staleness tolerance through that flag. The protocol is
versioned by a byte in the setup request and is deliberately not
interoperable with real RAN stacks (no ASN.1, no SCTP, no security).

Subscription mutations are serialized through one broker-side lock;
indication fan-out reads an immutable routing snapshot that is swapped
atomically whenever plans change.
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from . import power
from .e2model import (
    SubscriptionItem,
    SubscriptionRequest,
    pack_name,
    pack_optional_u64,
    pack_u64,
)
from .merge import ChangeAction, DuplicateDemandError, MergeState, UnknownDemandError
from .e2model import KpiDemand
from .power import PowerModel

logger = logging.getLogger("ricmerge.wire")

PROTOCOL_VERSION = 1
# Sender id used on broker-to-node subscription messages.
BROKER_SENDER = 2**64 - 1

KIND_SETUP_REQUEST = 1
KIND_SETUP_RESPONSE = 2
KIND_SUBSCRIBE = 3
KIND_SUBSCRIBE_REPLY = 4
KIND_UNSUBSCRIBE = 5
KIND_INDICATION = 6

MAX_FRAME_BYTES = 2**32 - 1


class CodecError(ValueError):
    """A wire frame could not be encoded or decoded."""


@dataclass(frozen=True)
class SetupRequest:
    node: int
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class SetupResponse:
    node: int
    accepted: bool
    reason: str = ""


@dataclass(frozen=True)
class Subscribe:
    sender: int
    node: int
    items: tuple[SubscriptionItem, ...]


@dataclass(frozen=True)
class SubscribeReply:
    node: int
    accepted: bool
    reason: str = ""


@dataclass(frozen=True)
class Unsubscribe:
    sender: int
    node: int
    items: tuple[tuple[str, int], ...]  # (kpi, period_ms)


@dataclass(frozen=True)
class Indication:
    node: int
    emit_time_ms: int
    period_ms: int
    samples: tuple[tuple[str, int], ...]  # (kpi, sample_time_ms)


WireMessage = (
    SetupRequest | SetupResponse | Subscribe | SubscribeReply | Unsubscribe | Indication
)


def _encode_body(msg: WireMessage) -> tuple[int, bytes]:
    if isinstance(msg, SetupRequest):
        return KIND_SETUP_REQUEST, bytes([msg.version]) + pack_u64(msg.node)
    if isinstance(msg, SetupResponse):
        body = pack_u64(msg.node) + bytes([int(msg.accepted)]) + pack_name(msg.reason)
        return KIND_SETUP_RESPONSE, body
    if isinstance(msg, Subscribe):
        parts = [pack_u64(msg.sender), pack_u64(msg.node), pack_u64(len(msg.items))]
        for item in msg.items:
            parts.append(pack_name(item.kpi))
            parts.append(pack_u64(item.period_ms))
            parts.append(pack_optional_u64(item.sensitivity_ms))
        return KIND_SUBSCRIBE, b"".join(parts)
    if isinstance(msg, SubscribeReply):
        body = pack_u64(msg.node) + bytes([int(msg.accepted)]) + pack_name(msg.reason)
        return KIND_SUBSCRIBE_REPLY, body
    if isinstance(msg, Unsubscribe):
        parts = [pack_u64(msg.sender), pack_u64(msg.node), pack_u64(len(msg.items))]
        for kpi, period in msg.items:
            parts.append(pack_name(kpi))
            parts.append(pack_u64(period))
        return KIND_UNSUBSCRIBE, b"".join(parts)
    if isinstance(msg, Indication):
        parts = [
            pack_u64(msg.node),
            pack_u64(msg.emit_time_ms),
            pack_u64(msg.period_ms),
            pack_u64(len(msg.samples)),
        ]
        for kpi, sample_time in msg.samples:
            parts.append(pack_name(kpi))
            parts.append(pack_u64(sample_time))
        return KIND_INDICATION, b"".join(parts)
    raise CodecError(f"not a wire message: {type(msg).__name__}")


def encode(msg: WireMessage) -> bytes:
    """Full frame bytes: length prefix, kind tag, body."""
    kind, body = _encode_body(msg)
    length = 1 + len(body)
    if length > MAX_FRAME_BYTES:
        raise CodecError(f"frame too large: {length} bytes")
    return struct.pack(">I", length) + bytes([kind]) + body


class _Reader:
    def __init__(self, data: bytes, pos: int = 0) -> None:
        self.data = data
        self.pos = pos

    def take(self, count: int) -> bytes:
        end = self.pos + count
        if end > len(self.data):
            raise CodecError("unexpected end of frame")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def name(self) -> str:
        length = self.u64()
        return self.take(length).decode("utf-8")

    def optional_u64(self) -> int | None:
        return self.u64() if self.u8() else None

    def done(self) -> None:
        if self.pos != len(self.data):
            raise CodecError("trailing bytes in frame")


def decode(frame: bytes) -> WireMessage:
    """Inverse of :func:`encode`; strict about truncation and trailers."""
    if len(frame) < 5:
        raise CodecError("truncated frame")
    (length,) = struct.unpack(">I", frame[:4])
    if length != len(frame) - 4:
        raise CodecError("frame length mismatch")
    kind = frame[4]
    reader = _Reader(frame, 5)
    if kind == KIND_SETUP_REQUEST:
        msg: WireMessage = SetupRequest(version=reader.u8(), node=reader.u64())
    elif kind == KIND_SETUP_RESPONSE:
        msg = SetupResponse(reader.u64(), bool(reader.u8()), reader.name())
    elif kind == KIND_SUBSCRIBE:
        sender, node = reader.u64(), reader.u64()
        items = tuple(
            SubscriptionItem(reader.name(), reader.u64(), reader.optional_u64())
            for _ in range(reader.u64())
        )
        msg = Subscribe(sender, node, items)
    elif kind == KIND_SUBSCRIBE_REPLY:
        msg = SubscribeReply(reader.u64(), bool(reader.u8()), reader.name())
    elif kind == KIND_UNSUBSCRIBE:
        sender, node = reader.u64(), reader.u64()
        items = tuple((reader.name(), reader.u64()) for _ in range(reader.u64()))
        msg = Unsubscribe(sender, node, items)
    elif kind == KIND_INDICATION:
        node, emit, period = reader.u64(), reader.u64(), reader.u64()
        samples = tuple((reader.name(), reader.u64()) for _ in range(reader.u64()))
        msg = Indication(node, emit, period, samples)
    else:
        raise CodecError(f"unknown message kind: {kind}")
    reader.done()
    return msg


def _recv_exact(sock: socket.socket, count: int) -> bytes | None:
    chunks = []
    remaining = count
    while remaining:
        try:
            chunk = sock.recv(remaining)
        except OSError:
            return None
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> bytes | None:
    """One full frame from the socket, or None on orderly close."""
    prefix = _recv_exact(sock, 4)
    if prefix is None:
        return None
    (length,) = struct.unpack(">I", prefix)
    if length < 1:
        return None
    rest = _recv_exact(sock, length)
    if rest is None:
        return None
    return prefix + rest


class _Peer:
    """A connected socket with serialized writes."""

    def __init__(self, sock: socket.socket) -> None:
        self.sock = sock
        self._send_lock = threading.Lock()

    def send(self, msg: WireMessage) -> bool:
        try:
            with self._send_lock:
                self.sock.sendall(encode(msg))
            return True
        except OSError:
            return False

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


@dataclass
class NodeTraffic:
    """Indication accounting for one connected node."""

    messages: int = 0
    samples: int = 0
    bytes: int = 0


class Broker:
    """RIC-side endpoint: owns the merge state, routes indications.

    Node connections open with a setup request; xApp connections open
    with their first subscribe. Every subscription change is pushed to
    the affected node as modified subscription messages.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        model: PowerModel | None = None,
        stats_interval_s: float | None = None,
    ) -> None:
        self._listen_addr = (host, port)
        self._model = model or PowerModel()
        self._stats_interval = stats_interval_s
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._stopping = threading.Event()
        self._lock = threading.Lock()  # serializes all subscription mutations
        self._engine = MergeState()
        self._nodes: dict[int, _Peer] = {}
        self._xapps: dict[int, _Peer] = {}
        # (node, kpi, period_ms) -> xApp ids; replaced wholesale on change.
        self._routing: dict[tuple[int, str, int], tuple[int, ...]] = {}
        self.node_traffic: dict[int, NodeTraffic] = {}

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "broker not started"
        return self._listener.getsockname()

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind(self._listen_addr)
        listener.listen()
        self._listener = listener
        self._spawn(self._accept_loop, "broker-accept")
        if self._stats_interval:
            self._spawn(self._stats_loop, "broker-stats")
        logger.info("broker listening on %s:%d", *self.address)

    def stop(self) -> None:
        self._stopping.set()
        if self._listener is not None:
            try:
                # Wakes a thread blocked in accept(); close alone may not.
                self._listener.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._listener.close()
        with self._lock:
            peers = list(self._nodes.values()) + list(self._xapps.values())
        for peer in peers:
            peer.close()
        for thread in self._threads:
            thread.join(timeout=5)

    def total_sample_rate(self) -> float:
        with self._lock:
            return float(self._engine.total_sample_rate())

    def plan_streams(self, node: int) -> set[tuple[str, int]]:
        with self._lock:
            return {
                (kpi, period) for (n, kpi, period) in self._routing if n == node
            }

    def _spawn(self, target, name: str) -> None:
        thread = threading.Thread(target=target, name=name, daemon=True)
        thread.start()
        self._threads.append(thread)

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                sock, addr = self._listener.accept()
            except OSError:
                break
            self._spawn(lambda s=sock, a=addr: self._serve_connection(s, a), "broker-conn")

    def _stats_loop(self) -> None:
        while not self._stopping.wait(self._stats_interval):
            rate = self.total_sample_rate()
            watts = power.predict(self._model, rate)
            logger.info("sample_rate=%.1f samples/s predicted_power=%.2f W", rate, watts)

    def _serve_connection(self, sock: socket.socket, addr) -> None:
        peer = _Peer(sock)
        node_id: int | None = None
        xapp_id: int | None = None
        reason = "connection closed"
        try:
            while not self._stopping.is_set():
                frame = read_frame(sock)
                if frame is None:
                    break
                try:
                    msg = decode(frame)
                except CodecError as exc:
                    reason = f"malformed frame: {exc}"
                    break
                if isinstance(msg, SetupRequest) and node_id is None and xapp_id is None:
                    node_id = self._handle_setup(peer, msg)
                    if node_id is None:
                        reason = "setup rejected"
                        break
                elif isinstance(msg, Indication) and node_id is not None:
                    self._handle_indication(msg, len(frame))
                elif isinstance(msg, Subscribe) and node_id is None:
                    if xapp_id is None:
                        xapp_id = msg.sender
                        with self._lock:
                            self._xapps[xapp_id] = peer
                    elif msg.sender != xapp_id:
                        reason = "sender id changed mid-connection"
                        break
                    self._handle_subscribe(peer, msg)
                elif isinstance(msg, Unsubscribe) and node_id is None and xapp_id is not None:
                    if msg.sender != xapp_id:
                        reason = "sender id changed mid-connection"
                        break
                    self._handle_unsubscribe(msg)
                else:
                    reason = f"unexpected {type(msg).__name__} on this connection"
                    break
        finally:
            logger.info("connection %s closed (%s)", addr, reason)
            self._cleanup(peer, node_id, xapp_id)
            peer.close()

    def _handle_setup(self, peer: _Peer, msg: SetupRequest) -> int | None:
        if msg.version != PROTOCOL_VERSION:
            peer.send(SetupResponse(msg.node, False, "unsupported protocol version"))
            return None
        with self._lock:
            if msg.node in self._nodes:
                peer.send(SetupResponse(msg.node, False, "node already connected"))
                return None
            self._nodes[msg.node] = peer
            self.node_traffic.setdefault(msg.node, NodeTraffic())
            backlog = tuple(
                SubscriptionItem(kpi, period)
                for (n, kpi, period) in sorted(self._routing)
                if n == msg.node
            )
        peer.send(SetupResponse(msg.node, True))
        if backlog:
            peer.send(Subscribe(BROKER_SENDER, msg.node, backlog))
        logger.info("node %d connected", msg.node)
        return msg.node

    def _handle_subscribe(self, peer: _Peer, msg: Subscribe) -> None:
        try:
            SubscriptionRequest(msg.sender, msg.node, msg.items)
        except ValueError as exc:
            peer.send(SubscribeReply(msg.node, False, str(exc)))
            return
        failure = None
        with self._lock:
            if msg.node not in self._nodes:
                failure = "unknown node"
            else:
                demands = [
                    KpiDemand(msg.sender, msg.node, i.kpi, i.period_ms, i.sensitivity_ms)
                    for i in msg.items
                ]
                try:
                    changes = self._engine.add_demands(demands)
                except DuplicateDemandError as exc:
                    failure = str(exc)
                else:
                    self._refresh_routing()
                    self._push_changes(changes)
        if failure is not None:
            peer.send(SubscribeReply(msg.node, False, failure))
        else:
            peer.send(SubscribeReply(msg.node, True))

    def _handle_unsubscribe(self, msg: Unsubscribe) -> None:
        with self._lock:
            changes = []
            for kpi, _period in msg.items:
                try:
                    changes.extend(self._engine.remove_demand(msg.sender, msg.node, kpi))
                except UnknownDemandError:
                    pass
            self._refresh_routing()
            self._push_changes(changes)

    def _handle_indication(self, msg: Indication, frame_len: int) -> None:
        traffic = self.node_traffic[msg.node]
        traffic.messages += 1
        traffic.samples += len(msg.samples)
        traffic.bytes += frame_len
        routing = self._routing  # snapshot reference; safe to read unlocked
        per_xapp: dict[int, list[tuple[str, int]]] = {}
        for kpi, sample_time in msg.samples:
            for xapp in routing.get((msg.node, kpi, msg.period_ms), ()):
                per_xapp.setdefault(xapp, []).append((kpi, sample_time))
        for xapp, samples in per_xapp.items():
            peer = self._xapps.get(xapp)
            if peer is not None:
                peer.send(
                    Indication(msg.node, msg.emit_time_ms, msg.period_ms, tuple(samples))
                )

    def _refresh_routing(self) -> None:
        routing: dict[tuple[int, str, int], tuple[int, ...]] = {}
        for (node, kpi), plan in self._engine.plans().items():
            for index, stream in enumerate(plan.streams):
                xapps = tuple(
                    sorted(x for x, i in plan.fanout.items() if i == index)
                )
                routing[(node, kpi, stream.period_ms)] = xapps
        self._routing = routing

    def _push_changes(self, changes) -> None:
        adds: dict[int, list[SubscriptionItem]] = {}
        drops: dict[int, list[tuple[str, int]]] = {}
        for change in changes:
            stream = change.stream
            if change.action is ChangeAction.ADDED:
                adds.setdefault(stream.node, []).append(
                    SubscriptionItem(stream.kpi, stream.period_ms)
                )
            elif change.action is ChangeAction.REMOVED:
                drops.setdefault(stream.node, []).append((stream.kpi, stream.period_ms))
            else:
                previous = change.previous
                assert previous is not None
                drops.setdefault(previous.node, []).append(
                    (previous.kpi, previous.period_ms)
                )
                adds.setdefault(stream.node, []).append(
                    SubscriptionItem(stream.kpi, stream.period_ms)
                )
        for node, items in drops.items():
            peer = self._nodes.get(node)
            if peer is not None:
                peer.send(Unsubscribe(BROKER_SENDER, node, tuple(items)))
        for node, items in adds.items():
            peer = self._nodes.get(node)
            if peer is not None:
                peer.send(Subscribe(BROKER_SENDER, node, tuple(items)))

    def _cleanup(self, peer: _Peer, node_id: int | None, xapp_id: int | None) -> None:
        with self._lock:
            if node_id is not None and self._nodes.get(node_id) is peer:
                del self._nodes[node_id]
            if xapp_id is not None and self._xapps.get(xapp_id) is peer:
                del self._xapps[xapp_id]
                changes = self._engine.remove_xapp(xapp_id)
                self._refresh_routing()
                self._push_changes(changes)


class NodeEmulator:
    """E2-node stand-in: honors subscription plans with wall-clock timers.

    Each distinct report period runs its own timer emitting one
    indication per tick carrying every KPI subscribed at that period
    (node-and-period batching).
    """

    def __init__(
        self,
        broker_host: str,
        broker_port: int,
        node_id: int,
        kpi_catalog: tuple[str, ...] = (),
        connect_attempts: int = 5,
        backoff_s: float = 0.2,
    ) -> None:
        self.node_id = node_id
        self.kpi_catalog = kpi_catalog
        self._addr = (broker_host, broker_port)
        self._connect_attempts = connect_attempts
        self._backoff_s = backoff_s
        self._peer: _Peer | None = None
        self._stopping = threading.Event()
        self._lock = threading.Lock()
        self._streams: dict[int, set[str]] = {}  # period_ms -> kpis
        self._timers: dict[int, threading.Thread] = {}
        self._reader: threading.Thread | None = None
        self._t0 = 0.0
        self.emitted_messages = 0
        self.emitted_samples = 0
        self.first_emit_monotonic: float | None = None

    def start(self) -> None:
        sock = self._connect_with_retry()
        self._peer = _Peer(sock)
        self._peer.send(SetupRequest(self.node_id))
        frame = read_frame(sock)
        if frame is None:
            raise ConnectionError("broker closed during setup")
        reply = decode(frame)
        if not isinstance(reply, SetupResponse) or not reply.accepted:
            reason = reply.reason if isinstance(reply, SetupResponse) else "bad reply"
            raise ConnectionError(f"setup rejected: {reason}")
        self._t0 = time.monotonic()
        self._reader = threading.Thread(
            target=self._read_loop, name=f"node-{self.node_id}", daemon=True
        )
        self._reader.start()
        logger.info("node %d attached to broker", self.node_id)

    def _connect_with_retry(self) -> socket.socket:
        delay = self._backoff_s
        for attempt in range(self._connect_attempts):
            try:
                return socket.create_connection(self._addr, timeout=5)
            except OSError as exc:
                if attempt == self._connect_attempts - 1:
                    raise ConnectionError(
                        f"broker unreachable after {self._connect_attempts} attempts: {exc}"
                    ) from exc
                time.sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")

    def stop(self) -> None:
        self._stopping.set()
        if self._peer is not None:
            self._peer.close()
        for timer in self._timers.values():
            timer.join(timeout=5)
        if self._reader is not None:
            self._reader.join(timeout=5)

    def active_streams(self) -> set[tuple[str, int]]:
        with self._lock:
            return {
                (kpi, period)
                for period, kpis in self._streams.items()
                for kpi in kpis
            }

    def _read_loop(self) -> None:
        assert self._peer is not None
        sock = self._peer.sock
        while not self._stopping.is_set():
            frame = read_frame(sock)
            if frame is None:
                break
            try:
                msg = decode(frame)
            except CodecError as exc:
                logger.warning("node %d: bad frame from broker: %s", self.node_id, exc)
                break
            if isinstance(msg, Subscribe):
                with self._lock:
                    for item in msg.items:
                        self._streams.setdefault(item.period_ms, set()).add(item.kpi)
                        self._ensure_timer(item.period_ms)
            elif isinstance(msg, Unsubscribe):
                with self._lock:
                    for kpi, period in msg.items:
                        kpis = self._streams.get(period)
                        if kpis is not None:
                            kpis.discard(kpi)
                            if not kpis:
                                del self._streams[period]

    def _ensure_timer(self, period_ms: int) -> None:
        if period_ms in self._timers and self._timers[period_ms].is_alive():
            return
        timer = threading.Thread(
            target=self._emit_loop,
            args=(period_ms,),
            name=f"node-{self.node_id}-timer-{period_ms}",
            daemon=True,
        )
        self._timers[period_ms] = timer
        timer.start()

    def _emit_loop(self, period_ms: int) -> None:
        assert self._peer is not None
        base = time.monotonic()
        tick = 0
        while not self._stopping.is_set():
            with self._lock:
                kpis = sorted(self._streams.get(period_ms, ()))
                live = period_ms in self._streams
            if not live:
                return
            if kpis:
                now_ms = int((time.monotonic() - self._t0) * 1000)
                msg = Indication(
                    self.node_id, now_ms, period_ms, tuple((k, now_ms) for k in kpis)
                )
                if not self._peer.send(msg):
                    return
                if self.first_emit_monotonic is None:
                    self.first_emit_monotonic = time.monotonic()
                self.emitted_messages += 1
                self.emitted_samples += len(kpis)
            tick += 1
            deadline = base + tick * period_ms / 1000.0
            delay = deadline - time.monotonic()
            if delay > 0 and self._stopping.wait(delay):
                return


class XAppClient:
    """Subscribing consumer; counts the indications it receives."""

    def __init__(self, broker_host: str, broker_port: int, xapp_id: int) -> None:
        self.xapp_id = xapp_id
        self._addr = (broker_host, broker_port)
        self._peer: _Peer | None = None
        self._reader: threading.Thread | None = None
        self._stopping = threading.Event()
        self._replies: "list[SubscribeReply]" = []
        self._reply_ready = threading.Condition()
        self.received_messages = 0
        self.received_samples = 0
        self.samples_per_kpi: dict[str, int] = {}

    def connect(self) -> None:
        sock = socket.create_connection(self._addr, timeout=5)
        self._peer = _Peer(sock)
        self._reader = threading.Thread(
            target=self._read_loop, name=f"xapp-{self.xapp_id}", daemon=True
        )
        self._reader.start()

    def close(self) -> None:
        self._stopping.set()
        if self._peer is not None:
            self._peer.close()
        if self._reader is not None:
            self._reader.join(timeout=5)

    def subscribe(
        self, node: int, items: tuple[SubscriptionItem, ...], timeout_s: float = 5.0
    ) -> SubscribeReply:
        assert self._peer is not None, "not connected"
        self._peer.send(Subscribe(self.xapp_id, node, items))
        deadline = time.monotonic() + timeout_s
        with self._reply_ready:
            while not self._replies:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError("no subscription reply from broker")
                self._reply_ready.wait(remaining)
            return self._replies.pop(0)

    def unsubscribe(self, node: int, items: tuple[tuple[str, int], ...]) -> None:
        assert self._peer is not None, "not connected"
        self._peer.send(Unsubscribe(self.xapp_id, node, items))

    def _read_loop(self) -> None:
        assert self._peer is not None
        sock = self._peer.sock
        while not self._stopping.is_set():
            frame = read_frame(sock)
            if frame is None:
                break
            try:
                msg = decode(frame)
            except CodecError as exc:
                logger.warning("xApp %d: bad frame: %s", self.xapp_id, exc)
                break
            if isinstance(msg, SubscribeReply):
                with self._reply_ready:
                    self._replies.append(msg)
                    self._reply_ready.notify()
            elif isinstance(msg, Indication):
                self.received_messages += 1
                self.received_samples += len(msg.samples)
                for kpi, _ in msg.samples:
                    self.samples_per_kpi[kpi] = self.samples_per_kpi.get(kpi, 0) + 1


def broker_serve(
    host: str,
    port: int,
    model: PowerModel | None = None,
    stats_interval_s: float = 1.0,
) -> None:
    """Run a broker until interrupted."""
    broker = Broker(host, port, model, stats_interval_s)
    broker.start()
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        broker.stop()


def node_emulate(
    broker_host: str, broker_port: int, node_id: int, kpi_catalog: tuple[str, ...]
) -> None:
    """Run a node emulator until interrupted."""
    node = NodeEmulator(broker_host, broker_port, node_id, kpi_catalog)
    node.start()
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        node.stop()


def xapp_run(
    broker_host: str,
    broker_port: int,
    xapp_id: int,
    node: int,
    items: tuple[SubscriptionItem, ...],
    duration_s: float | None = None,
) -> dict[str, int]:
    """Subscribe, consume for a while, and return receive counters."""
    client = XAppClient(broker_host, broker_port, xapp_id)
    client.connect()
    try:
        reply = client.subscribe(node, items)
        if not reply.accepted:
            raise RuntimeError(f"subscription rejected: {reply.reason}")
        if duration_s is None:
            while True:
                time.sleep(3600)
        else:
            time.sleep(duration_s)
    except KeyboardInterrupt:
        pass
    finally:
        client.close()
    return {
        "messages": client.received_messages,
        "samples": client.received_samples,
    }
