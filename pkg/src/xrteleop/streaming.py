"""Packet transport and instrumentation: publish, subscribe, measure, record.

Design in one paragraph: a Publisher pulls packets from a source iterator on
a fixed-rate ticker and fans them out to connected clients through depth-1
latest-only slots, so a slow client never stalls the loop or its peers and
always wakes to the freshest frame. Subscribers run one thread each, decode
with sequence checking (drops reordered frames, never delivers out of
order), route bad frames to an error callback, and reconnect with
exponential backoff (base 100 ms, cap 5 s). Two transports: length-prefixed
JSON frames over raw TCP (4-byte big-endian length + UTF-8 body) and
standard websocket text frames for browsers.

The episode recorder is a pure resampler over timestamped streams; file I/O
is line-delimited JSON with a self-describing header, byte-stable across
save/load/save.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import socket
import struct
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .errors import (
    BindFailure,
    ConnectFailure,
    DimensionDrift,
    EmptyStream,
    EmptyWindow,
    MalformedJson,
    ProtocolError,
    SerializationFailure,
    StaleSequence,
)
from .protocol import TrackingPacket, decode_packet, encode_packet
from .timing import RateTicker, now_ns, sleep_until

logger = logging.getLogger(__name__)

TCP_FRAMED = "tcp_framed"
WEBSOCKET = "websocket"

MAX_FRAME_BYTES = 16 * 1024 * 1024
_RECV_CHUNK = 65536

# Kernel socket buffers are capped so the latest-only slots actually bound
# staleness: with default (megabyte) buffers a slow client reads a deep
# backlog of old frames instead of fresh ones.
_SOCKET_BUFFER_BYTES = 32768


def _bound_buffers(sock: socket.socket) -> None:
    try:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_SNDBUF, _SOCKET_BUFFER_BYTES)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, _SOCKET_BUFFER_BYTES)
    except OSError:  # platform refuses: freshness degrades, stream still works
        logger.debug("could not bound socket buffers", exc_info=True)


@dataclass(frozen=True)
class StreamConfig:
    host: str = "127.0.0.1"
    port: int = 0  # 0 = ephemeral; read the bound port from the handle
    rate_hz: float = 90.0
    transport: str = TCP_FRAMED
    max_clients: int = 8

    def __post_init__(self):
        if not (np.isfinite(self.rate_hz) and self.rate_hz > 0):
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port {self.port} out of range")
        if self.transport not in (TCP_FRAMED, WEBSOCKET):
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.max_clients < 1:
            raise ValueError("max_clients must be >= 1")


# --- wire framing ---------------------------------------------------------------


def frame_message(payload: bytes) -> bytes:
    """4-byte big-endian length prefix + payload."""
    if len(payload) > MAX_FRAME_BYTES:
        raise SerializationFailure(f"frame of {len(payload)} bytes exceeds limit")
    return struct.pack(">I", len(payload)) + payload


class FrameReader:
    """Incremental parser for the length-prefixed stream; feed() returns frames."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        self._buffer.extend(data)
        frames = []
        while True:
            if len(self._buffer) < 4:
                return frames
            (length,) = struct.unpack_from(">I", self._buffer)
            if length > MAX_FRAME_BYTES:
                raise MalformedJson(f"frame length {length} exceeds limit")
            if len(self._buffer) < 4 + length:
                return frames
            frames.append(bytes(self._buffer[4 : 4 + length]))
            del self._buffer[: 4 + length]


class _LatestSlot:
    """Depth-1 handoff cell: writers overwrite, readers take the newest."""

    def __init__(self):
        self._cond = threading.Condition()
        self._item: Optional[bytes] = None
        self._generation = 0
        self.closed = False

    def put(self, item: bytes) -> None:
        with self._cond:
            self._item = item
            self._generation += 1
            self._cond.notify_all()

    def take(self, last_generation: int, timeout: Optional[float] = None):
        """Newest (generation, item) after last_generation, or None on timeout/close."""
        with self._cond:
            ok = self._cond.wait_for(
                lambda: self.closed or self._generation > last_generation, timeout
            )
            if not ok or self.closed:
                return None
            return self._generation, self._item

    def close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()


# --- publisher -------------------------------------------------------------------


class Publisher:
    """Fixed-rate fan-out server; construct via publish().

    The tick thread pulls one packet per tick from the source, stamps
    sequence/timestamp (unless stamp=False), encodes once, and overwrites
    every client's slot. Per-client sender threads do the blocking writes.
    """

    def __init__(self, source: Iterable, cfg: StreamConfig, stamp: bool = True):
        self._source: Iterator = iter(source)
        self.cfg = cfg
        self._stamp = stamp
        self._sequence = 0
        self._stop = threading.Event()
        self.finished = threading.Event()  # source exhausted or stop() called
        self._clients: dict[int, _LatestSlot] = {}
        self._clients_lock = threading.Lock()
        self._next_client_id = 0
        self._threads: list[threading.Thread] = []
        self.sent_count = 0
        self.skipped_count = 0

        self._listener = None
        self._ws_server = None
        if cfg.transport == TCP_FRAMED:
            self._start_tcp()
        else:
            self._start_websocket()

        tick = threading.Thread(target=self._tick_loop, name="publisher-tick", daemon=True)
        tick.start()
        self._threads.append(tick)

    # -- transport setup

    def _start_tcp(self):
        try:
            listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            listener.bind((self.cfg.host, self.cfg.port))
            listener.listen(self.cfg.max_clients)
        except OSError as exc:
            raise BindFailure(f"cannot bind {self.cfg.host}:{self.cfg.port}: {exc}") from exc
        self._listener = listener
        accept = threading.Thread(target=self._accept_loop, name="publisher-accept", daemon=True)
        accept.start()
        self._threads.append(accept)

    def _start_websocket(self):
        from websockets.sync.server import serve

        try:
            self._ws_server = serve(self._ws_handler, self.cfg.host, self.cfg.port)
        except OSError as exc:
            raise BindFailure(f"cannot bind {self.cfg.host}:{self.cfg.port}: {exc}") from exc
        runner = threading.Thread(
            target=self._ws_server.serve_forever, name="publisher-ws", daemon=True
        )
        runner.start()
        self._threads.append(runner)

    @property
    def address(self) -> tuple[str, int]:
        if self._listener is not None:
            host, port = self._listener.getsockname()[:2]
        else:
            host, port = self._ws_server.socket.getsockname()[:2]
        return host, port

    # -- client management

    def _register(self) -> Optional[tuple[int, _LatestSlot]]:
        with self._clients_lock:
            if len(self._clients) >= self.cfg.max_clients:
                return None
            client_id = self._next_client_id
            self._next_client_id += 1
            slot = _LatestSlot()
            self._clients[client_id] = slot
            return client_id, slot

    def _deregister(self, client_id: int) -> None:
        with self._clients_lock:
            slot = self._clients.pop(client_id, None)
        if slot is not None:
            slot.close()

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return  # listener closed
            registration = self._register()
            if registration is None:
                conn.close()
                continue
            client_id, slot = registration
            sender = threading.Thread(
                target=self._tcp_sender,
                args=(conn, client_id, slot),
                name=f"publisher-client-{client_id}",
                daemon=True,
            )
            sender.start()
            self._threads.append(sender)

    def _tcp_sender(self, conn: socket.socket, client_id: int, slot: _LatestSlot):
        generation = 0
        try:
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            _bound_buffers(conn)
            while not self._stop.is_set():
                entry = slot.take(generation, timeout=0.5)
                if entry is None:
                    if slot.closed:
                        return
                    continue
                generation, payload = entry
                conn.sendall(frame_message(payload))
        except OSError:
            pass  # client went away
        finally:
            self._deregister(client_id)
            conn.close()

    def _ws_handler(self, conn):
        registration = self._register()
        if registration is None:
            conn.close()
            return
        client_id, slot = registration
        generation = 0
        try:
            while not self._stop.is_set():
                entry = slot.take(generation, timeout=0.5)
                if entry is None:
                    if slot.closed:
                        return
                    continue
                generation, payload = entry
                conn.send(payload.decode("utf-8"))
        except Exception:
            pass  # client went away mid-send
        finally:
            self._deregister(client_id)

    # -- production

    def _tick_loop(self):
        ticker = RateTicker(self.cfg.rate_hz)
        while not self._stop.is_set():
            ticker.wait()
            try:
                packet = next(self._source)
            except StopIteration:
                break
            if packet is None:
                continue
            try:
                payload = self._encode(packet)
            except (SerializationFailure, ProtocolError) as exc:
                self.skipped_count += 1
                logger.warning("dropping unencodable packet: %s", exc)
                continue
            with self._clients_lock:
                slots = list(self._clients.values())
            for slot in slots:
                slot.put(payload)
            self.sent_count += 1
        self.finished.set()

    def _encode(self, packet: Union[TrackingPacket, bytes]) -> bytes:
        if isinstance(packet, (bytes, bytearray)):
            return bytes(packet)
        try:
            if self._stamp:
                packet = dataclasses.replace(
                    packet, sequence=self._sequence, timestamp=now_ns()
                )
                self._sequence += 1
            return encode_packet(packet)
        except ProtocolError:
            raise
        except Exception as exc:
            raise SerializationFailure(str(exc)) from exc

    # -- lifecycle

    def stop(self) -> None:
        self._stop.set()
        with self._clients_lock:
            slots = list(self._clients.values())
        for slot in slots:
            slot.close()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        if self._ws_server is not None:
            self._ws_server.shutdown()
        self.finished.set()

    def join(self, timeout: Optional[float] = None) -> None:
        self.finished.wait(timeout)

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.stop()


def publish(source: Iterable, cfg: StreamConfig, stamp: bool = True) -> Publisher:
    """Start a publisher pulling from `source` at cfg.rate_hz; returns the handle."""
    return Publisher(source, cfg, stamp=stamp)


# --- subscriber ------------------------------------------------------------------


class Subscriber:
    """One receive thread: decode, order-check, deliver; reconnect on loss."""

    def __init__(
        self,
        address: tuple[str, int],
        on_packet: Callable[[TrackingPacket], None],
        on_error: Optional[Callable[[Exception], None]] = None,
        transport: str = TCP_FRAMED,
        reconnect: bool = True,
        max_retries: Optional[int] = None,
        backoff_base_s: float = 0.1,
        backoff_cap_s: float = 5.0,
    ):
        if transport not in (TCP_FRAMED, WEBSOCKET):
            raise ValueError(f"unknown transport {transport!r}")
        self.address = address
        self._on_packet = on_packet
        self._on_error = on_error or (lambda exc: None)
        self._transport = transport
        self._reconnect = reconnect
        self._max_retries = max_retries
        self._backoff_base_s = backoff_base_s
        self._backoff_cap_s = backoff_cap_s

        self._stop = threading.Event()
        self.connected = threading.Event()
        self.error: Optional[Exception] = None
        self.delivered = 0
        self.stale_drops = 0
        self._last_sequence: Optional[int] = None
        self._session_opened = False
        self._conn = None
        self._conn_lock = threading.Lock()

        self._thread = threading.Thread(target=self._run, name="subscriber", daemon=True)
        self._thread.start()

    def _run(self):
        failures = 0
        while not self._stop.is_set():
            self._session_opened = False
            try:
                self._connect_and_pump()
                failures = 0
            except OSError as exc:
                # a drop after a live session restarts the backoff ladder
                failures = 1 if self._session_opened else failures + 1
                if self._max_retries is not None and failures > self._max_retries:
                    self.error = ConnectFailure(
                        f"gave up after {failures} attempts: {exc}"
                    )
                    self._on_error(self.error)
                    return
            finally:
                self.connected.clear()
            if not self._reconnect or self._stop.is_set():
                return
            backoff = min(self._backoff_base_s * 2 ** max(failures - 1, 0), self._backoff_cap_s)
            self._stop.wait(backoff)

    def _connect_and_pump(self):
        if self._transport == TCP_FRAMED:
            self._pump_tcp()
        else:
            self._pump_websocket()

    def _pump_tcp(self):
        conn = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        _bound_buffers(conn)  # before connect so the negotiated window honors it
        conn.settimeout(5.0)
        conn.connect(self.address)
        with self._conn_lock:
            self._conn = conn
        try:
            conn.settimeout(0.5)
            self.connected.set()
            self._session_opened = True
            self._last_sequence = None  # each connection is a fresh sequence domain
            reader = FrameReader()
            while not self._stop.is_set():
                try:
                    data = conn.recv(_RECV_CHUNK)
                except socket.timeout:
                    continue
                if not data:
                    raise ConnectionError("publisher closed the connection")
                try:
                    frames = reader.feed(data)
                except MalformedJson as exc:
                    self._on_error(exc)
                    raise ConnectionError("unrecoverable frame desync") from exc
                for payload in frames:
                    self._deliver(payload)
        finally:
            with self._conn_lock:
                self._conn = None
            conn.close()

    def _pump_websocket(self):
        from websockets.sync.client import connect

        uri = f"ws://{self.address[0]}:{self.address[1]}"
        try:
            conn = connect(uri, open_timeout=5.0, close_timeout=1.0)
        except Exception as exc:  # websockets raises its own hierarchy
            raise ConnectionError(str(exc)) from exc
        with self._conn_lock:
            self._conn = conn
        try:
            self.connected.set()
            self._session_opened = True
            self._last_sequence = None  # each connection is a fresh sequence domain
            while not self._stop.is_set():
                try:
                    message = conn.recv(timeout=0.5)
                except TimeoutError:
                    continue
                except Exception as exc:
                    raise ConnectionError(str(exc)) from exc
                payload = message.encode("utf-8") if isinstance(message, str) else message
                self._deliver(payload)
        finally:
            with self._conn_lock:
                self._conn = None
            try:
                conn.close()
            except Exception:
                pass

    def _deliver(self, payload: bytes):
        try:
            packet = decode_packet(payload, last_sequence=self._last_sequence)
        except StaleSequence:
            self.stale_drops += 1  # reordered or duplicated frame: drop, never deliver
            return
        except ProtocolError as exc:
            self._on_error(exc)
            return
        self._last_sequence = packet.sequence
        self.delivered += 1
        self._on_packet(packet)

    def stop(self) -> None:
        self._stop.set()
        with self._conn_lock:
            conn = self._conn
        if conn is not None:
            try:
                conn.close()
            except Exception:
                pass
        self._thread.join(timeout=5.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.stop()


def subscribe(
    address: tuple[str, int],
    on_packet: Callable[[TrackingPacket], None],
    on_error: Optional[Callable[[Exception], None]] = None,
    **options,
) -> Subscriber:
    """Start a subscriber thread delivering packets in arrival order."""
    return Subscriber(address, on_packet, on_error, **options)


# --- latency instrumentation -----------------------------------------------------


@dataclass(frozen=True)
class LatencySample:
    sent_ns: int
    received_ns: int
    sequence: int


@dataclass(frozen=True)
class LatencyReport:
    samples: int
    mean_ms: float
    std_ms: float
    p99_ms: float
    loss_fraction: float

    def __str__(self):
        return (
            f"{self.samples} samples: mean {self.mean_ms:.3f} ms, "
            f"std {self.std_ms:.3f} ms, p99 {self.p99_ms:.3f} ms, "
            f"loss {100 * self.loss_fraction:.2f}%"
        )


def measure_latency(
    samples: Sequence[LatencySample], clock_offset_ns: int = 0
) -> LatencyReport:
    """Mean/std/p99 of receive-minus-send over a window, loss from sequence gaps.

    clock_offset_ns is added to every send timestamp (receiver_clock =
    sender_clock + offset); zero on a single host.
    """
    samples = list(samples)
    if not samples:
        raise EmptyWindow("no latency samples in window")
    delays_ms = np.array(
        [(s.received_ns - s.sent_ns - clock_offset_ns) / 1e6 for s in samples]
    )
    sequences = {s.sequence for s in samples}
    span = max(sequences) - min(sequences) + 1
    loss = 1.0 - len(sequences) / span
    return LatencyReport(
        samples=len(samples),
        mean_ms=float(np.mean(delays_ms)),
        std_ms=float(np.std(delays_ms)),
        p99_ms=float(np.percentile(delays_ms, 99)),
        loss_fraction=float(loss),
    )


# --- episode recording -----------------------------------------------------------


@dataclass(frozen=True)
class EpisodeFrame:
    t_ns: int
    joint_state: tuple[float, ...]
    command: tuple[float, ...]
    packet_ref: int


@dataclass(frozen=True)
class EpisodeRecord:
    """Fixed-rate resampled episode; self-describing, learning-pipeline ready."""

    frames: tuple[EpisodeFrame, ...]
    rate_hz: float = 50.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise EmptyStream("an episode needs at least one frame")
        for earlier, later in zip(frames, frames[1:]):
            if later.t_ns <= earlier.t_ns:
                raise ValueError("frame timestamps must strictly increase")
        state_dim = len(frames[0].joint_state)
        command_dim = len(frames[0].command)
        for frame in frames:
            if len(frame.joint_state) != state_dim or len(frame.command) != command_dim:
                raise DimensionDrift("vector length changed between frames")
        object.__setattr__(self, "frames", frames)

    @property
    def dims(self) -> dict:
        return {
            "joint_state": len(self.frames[0].joint_state),
            "command": len(self.frames[0].command),
        }


def _as_samples(stream, width: int, what: str) -> list[tuple]:
    samples = []
    for entry in stream:
        entry = tuple(entry)
        if len(entry) != width:
            raise ValueError(f"{what} entries need {width} elements, got {len(entry)}")
        samples.append(entry)
    if not samples:
        raise EmptyStream(f"{what} stream is empty")
    for earlier, later in zip(samples, samples[1:]):
        if later[0] < earlier[0]:
            raise ValueError(f"{what} stream timestamps must be non-decreasing")
    return samples


def record_episode(
    state_stream: Iterable,
    command_stream: Iterable,
    rate_hz: float = 50.0,
    metadata: Optional[dict] = None,
) -> EpisodeRecord:
    """Resample two timestamped streams onto the recorder clock.

    state_stream yields (t_ns, vector, packet_ref); command_stream yields
    (t_ns, vector). Ticks run at rate_hz across the overlap of the two
    streams; each tick takes the nearest-older sample from each source.
    """
    if rate_hz <= 0:
        raise ValueError(f"rate_hz must be positive, got {rate_hz}")
    states = _as_samples(state_stream, 3, "state")
    commands = _as_samples(command_stream, 2, "command")

    state_dim = len(states[0][1])
    for _, vec, _ in states:
        if len(vec) != state_dim:
            raise DimensionDrift("state vector length changed mid-episode")
    command_dim = len(commands[0][1])
    for _, vec in commands:
        if len(vec) != command_dim:
            raise DimensionDrift("command vector length changed mid-episode")

    start = max(states[0][0], commands[0][0])
    end = min(states[-1][0], commands[-1][0])
    if end < start:
        raise EmptyStream("state and command streams do not overlap in time")

    state_times = [s[0] for s in states]
    command_times = [c[0] for c in commands]
    period = 1e9 / rate_hz
    frames = []
    k = 0
    while True:
        tick = start + round(k * period)
        if tick > end:
            break
        si = bisect_right(state_times, tick) - 1
        ci = bisect_right(command_times, tick) - 1
        _, state_vec, packet_ref = states[si]
        frames.append(
            EpisodeFrame(
                t_ns=tick,
                joint_state=tuple(float(v) for v in state_vec),
                command=tuple(float(v) for v in commands[ci][1]),
                packet_ref=int(packet_ref),
            )
        )
        k += 1
    return EpisodeRecord(frames=tuple(frames), rate_hz=float(rate_hz), metadata=metadata or {})


_EPISODE_FORMAT = "episode"
_SESSION_FORMAT = "tracking_session"
_FORMAT_VERSION = 1


def save_episode(record: EpisodeRecord, path) -> None:
    """Header line + one JSON line per frame; byte-stable across load/save."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": _EPISODE_FORMAT,
            "version": _FORMAT_VERSION,
            "rate_hz": record.rate_hz,
            "dims": record.dims,
            "metadata": record.metadata,
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for frame in record.frames:
            fh.write(
                json.dumps(
                    {
                        "t": frame.t_ns,
                        "joint_state": list(frame.joint_state),
                        "command": list(frame.command),
                        "packet_ref": frame.packet_ref,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def load_episode(path) -> EpisodeRecord:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise EmptyStream(f"{path}: empty episode file")
    header = json.loads(lines[0])
    if header.get("format") != _EPISODE_FORMAT or header.get("version") != _FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{_FORMAT_VERSION} episode file")
    frames = []
    for line in lines[1:]:
        obj = json.loads(line)
        frames.append(
            EpisodeFrame(
                t_ns=int(obj["t"]),
                joint_state=tuple(float(v) for v in obj["joint_state"]),
                command=tuple(float(v) for v in obj["command"]),
                packet_ref=int(obj["packet_ref"]),
            )
        )
    return EpisodeRecord(
        frames=tuple(frames), rate_hz=float(header["rate_hz"]), metadata=header["metadata"]
    )


def replay_episode(
    record: EpisodeRecord, sink: Callable[[EpisodeFrame], None]
) -> list[int]:
    """Re-emit frames at the recorded cadence; returns per-frame overshoot ns.

    Scheduling is absolute (anchor + recorded offsets), so delivery error
    does not accumulate; each frame lands within the sleep precision of the
    host (well under 1 ms unloaded).
    """
    anchor = now_ns()
    t0 = record.frames[0].t_ns
    overshoots = []
    for frame in record.frames:
        overshoots.append(sleep_until(anchor + (frame.t_ns - t0)))
        sink(frame)
    return overshoots


# --- tracking-session files --------------------------------------------------------


def save_session(packets: Iterable[TrackingPacket], path, metadata: Optional[dict] = None):
    """Persist a packet sequence as JSONL: header, then canonical packet lines."""
    with open(path, "wb") as fh:
        header = {
            "format": _SESSION_FORMAT,
            "version": _FORMAT_VERSION,
            "metadata": metadata or {},
        }
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n")
        for packet in packets:
            fh.write(encode_packet(packet) + b"\n")


def load_session(path) -> tuple[dict, list[TrackingPacket]]:
    with open(path, "rb") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise EmptyStream(f"{path}: empty session file")
    header = json.loads(lines[0])
    if header.get("format") != _SESSION_FORMAT or header.get("version") != _FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{_FORMAT_VERSION} session file")
    return header.get("metadata", {}), [decode_packet(line) for line in lines[1:]]
