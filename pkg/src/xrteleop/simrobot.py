"""Deterministic simulated robot: command integration and the closed loop.

Kinematic simulation only — joint velocities integrate, hand and gimbal
configurations apply directly, the base follows a unicycle-with-strafe
model. That is exactly enough plant to close the teleoperation loop and
validate every solver in the package without hardware.

Two loop drivers share the same per-tick logic:

- run_session: offline, virtual-time, fully deterministic (the byte-identical
  trace contract lives here), with optional seeded network emulation;
- TeleopService: the live websocket service — browsers push tracking packets
  up the same connection that streams simulated state back down.

Consumption is latest-only with a sequence guard in both drivers: each tick
acts on the newest arrival, and a frame that would regress the sequence is
discarded, so a command is never derived from out-of-order data.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import teleop as teleop_mod
from .chain import KinematicChain
from .errors import BindFailure, DimensionMismatch, EmptyStream, XrTeleopError
from .protocol import TrackingPacket, decode_packet, encode_packet
from .streaming import _LatestSlot, record_episode
from .teleop import (
    ArmVelocity,
    BaseVelocity,
    CommandFailure,
    GimbalAngles,
    Gripper,
    HandConfig,
    TeleopConfig,
    TeleopState,
)
from .timing import RateTicker, now_ns

logger = logging.getLogger(__name__)

DEFAULT_RATE_HZ = 90.0


def wrap_angle(theta: float) -> float:
    """Wrap into (-pi, pi]; -pi maps to +pi so the interval is half-open."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


# --- state -----------------------------------------------------------------------


@dataclass(frozen=True)
class SimState:
    """Snapshot of the whole simulated robot at one instant."""

    configurations: Mapping[str, np.ndarray]
    base: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x, y, heading
    gimbal: tuple[float, float] = (0.0, 0.0)  # yaw, pitch
    grippers: Mapping[str, float] = field(default_factory=dict)
    t_ns: int = 0

    def __post_init__(self):
        configurations = {}
        for chain_id, q in self.configurations.items():
            q = np.asarray(q, dtype=float)
            q.setflags(write=False)
            configurations[chain_id] = q
        object.__setattr__(self, "configurations", configurations)
        x, y, heading = self.base
        object.__setattr__(self, "base", (float(x), float(y), wrap_angle(float(heading))))
        yaw, pitch = self.gimbal
        object.__setattr__(self, "gimbal", (float(yaw), float(pitch)))
        object.__setattr__(
            self, "grippers", {side: float(v) for side, v in self.grippers.items()}
        )


def initial_sim_state(
    chains: Mapping[str, KinematicChain],
    t_ns: int = 0,
    homes: Optional[Mapping[str, np.ndarray]] = None,
) -> SimState:
    homes = homes or {}
    return SimState(
        configurations={
            cid: homes.get(cid, chain.zero_configuration()) for cid, chain in chains.items()
        },
        t_ns=t_ns,
    )


def state_to_dict(state: SimState) -> dict:
    return {
        "t": state.t_ns,
        "chains": {cid: list(map(float, q)) for cid, q in sorted(state.configurations.items())},
        "base": list(state.base),
        "gimbal": list(state.gimbal),
        "grippers": {side: state.grippers[side] for side in sorted(state.grippers)},
    }


def encode_state(state: SimState) -> bytes:
    """Canonical JSON state frame; equal states encode to equal bytes."""
    return json.dumps(state_to_dict(state), separators=(",", ":")).encode("utf-8")


def save_state_trace(states: Sequence[SimState], path) -> None:
    with open(path, "wb") as fh:
        for state in states:
            fh.write(encode_state(state) + b"\n")


# --- the plant -----------------------------------------------------------------------


def sim_step(
    state: SimState,
    commands: Iterable,
    chains: Mapping[str, KinematicChain],
    dt: float,
) -> SimState:
    """Advance the plant by dt under a command list; pure and deterministic.

    Velocities integrate with clamping into joint limits; positional commands
    (hand, gimbal, gripper) apply directly; the base integrates body-frame
    velocities through the current heading. Unknown commands are ignored so
    CommandFailure entries flow through harmlessly.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    configurations = dict(state.configurations)
    x, y, heading = state.base
    gimbal = state.gimbal
    grippers = dict(state.grippers)

    for command in commands:
        if isinstance(command, ArmVelocity):
            chain = _chain_for(chains, command.chain_id)
            q = configurations[command.chain_id]
            qdot = np.asarray(command.qdot, dtype=float)
            if qdot.shape != q.shape:
                raise DimensionMismatch(
                    f"{command.chain_id}: qdot length {qdot.shape[0]} != dof {q.shape[0]}"
                )
            lo, hi = chain.position_limits()
            configurations[command.chain_id] = np.clip(q + qdot * dt, lo, hi)
        elif isinstance(command, HandConfig):
            chain = _chain_for(chains, command.chain_id)
            q = np.asarray(command.q, dtype=float)
            if q.shape[0] != chain.dof:
                raise DimensionMismatch(
                    f"{command.chain_id}: q length {q.shape[0]} != dof {chain.dof}"
                )
            lo, hi = chain.position_limits()
            configurations[command.chain_id] = np.clip(q, lo, hi)
        elif isinstance(command, BaseVelocity):
            # body-frame velocity rotated through the current heading
            x += (command.vx * math.cos(heading) - command.vy * math.sin(heading)) * dt
            y += (command.vx * math.sin(heading) + command.vy * math.cos(heading)) * dt
            heading = wrap_angle(heading + command.wz * dt)
        elif isinstance(command, GimbalAngles):
            gimbal = (command.yaw, command.pitch)
        elif isinstance(command, Gripper):
            grippers[command.side] = command.value
        elif isinstance(command, CommandFailure):
            logger.debug("ignoring failed command from %s: %s", command.source, command.reason)

    return SimState(
        configurations=configurations,
        base=(x, y, heading),
        gimbal=gimbal,
        grippers=grippers,
        t_ns=state.t_ns + round(dt * 1e9),
    )


def _chain_for(chains: Mapping[str, KinematicChain], chain_id: str) -> KinematicChain:
    try:
        return chains[chain_id]
    except KeyError:
        raise DimensionMismatch(f"no simulated chain {chain_id!r}") from None


def config_chains(cfg: TeleopConfig) -> dict[str, KinematicChain]:
    """The chain table a config drives: arms and hands keyed by chain id."""
    chains = {m.chain_id: m.chain for m in cfg.arms.values()}
    chains.update({m.chain_id: m.chain for m in cfg.hands.values()})
    return chains


def config_homes(cfg: TeleopConfig) -> dict[str, np.ndarray]:
    """Declared start configurations keyed by chain id (chains without one omitted)."""
    mappings = list(cfg.arms.values()) + list(cfg.hands.values())
    return {m.chain_id: m.home for m in mappings if m.home is not None}


# --- network emulation ------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkEmulation:
    """Seeded delay/drop model applied to packet arrival times."""

    delay_ms: tuple[float, float] = (0.0, 0.0)  # constant when lo == hi
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = (float(v) for v in self.delay_ms)
        if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 <= lo <= hi):
            raise ValueError(f"delay range ({lo}, {hi}) is not valid")
        if not 0.0 <= self.drop_probability < 1.0:
            raise ValueError(f"drop probability {self.drop_probability} outside [0, 1)")
        object.__setattr__(self, "delay_ms", (lo, hi))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def draw_delay_ns(self, rng: np.random.Generator) -> int:
        lo, hi = self.delay_ms
        delay = lo if lo == hi else rng.uniform(lo, hi)
        return round(delay * 1e6)

    def draw_drop(self, rng: np.random.Generator) -> bool:
        # one uniform per packet even at zero probability keeps the stream
        # of draws aligned across emulation settings
        return bool(rng.uniform() < self.drop_probability)


def parse_emulation(text: str, drop: float = 0.0, seed: int = 0) -> NetworkEmulation:
    """Parse "constant:<ms>" or "uniform:<lo>:<hi>" delay specifications."""
    parts = text.split(":")
    if parts[0] == "constant" and len(parts) == 2:
        value = float(parts[1])
        return NetworkEmulation((value, value), drop, seed)
    if parts[0] == "uniform" and len(parts) == 3:
        return NetworkEmulation((float(parts[1]), float(parts[2])), drop, seed)
    raise ValueError(f"cannot parse emulation spec {text!r}")


def emulate_arrivals(
    packets: Sequence[TrackingPacket], emulation: Optional[NetworkEmulation]
) -> list[tuple[int, TrackingPacket]]:
    """(arrival_ns, packet) pairs, delayed/dropped/reordered per the model."""
    if emulation is None:
        return [(p.timestamp, p) for p in packets]
    rng = emulation.rng()
    arrivals = []
    for packet in packets:
        dropped = emulation.draw_drop(rng)
        delay = emulation.draw_delay_ns(rng)
        if dropped:
            continue
        arrivals.append((packet.timestamp + delay, packet))
    arrivals.sort(key=lambda pair: pair[0])  # stable: ties keep send order
    return arrivals


# --- offline sessions ---------------------------------------------------------------------


@dataclass(frozen=True)
class SessionResult:
    states: tuple[SimState, ...]
    consumed: tuple[Optional[int], ...]  # sequence acted on per tick (None = held)
    episode: Optional[object] = None

    def trace(self) -> bytes:
        return b"\n".join(encode_state(s) for s in self.states) + b"\n"


def _episode_command_vector(
    commands, cfg: TeleopConfig, chains: Mapping[str, KinematicChain], previous: np.ndarray
) -> np.ndarray:
    """Fixed-width command vector per tick: arm rates, hand targets, base, gimbal.

    Absent arm commands read as zero rate; absent hand/gimbal commands hold the
    previous value so the vector width never drifts.
    """
    arm_ids = sorted(m.chain_id for m in cfg.arms.values())
    hand_ids = sorted(m.chain_id for m in cfg.hands.values())
    by_type = {ArmVelocity: {}, HandConfig: {}}
    base = None
    gimbal = None
    for command in commands:
        if isinstance(command, (ArmVelocity, HandConfig)):
            by_type[type(command)][command.chain_id] = command
        elif isinstance(command, BaseVelocity):
            base = command
        elif isinstance(command, GimbalAngles):
            gimbal = command

    parts = []
    cursor = 0
    for cid in arm_ids:
        dof = chains[cid].dof
        cmd = by_type[ArmVelocity].get(cid)
        parts.append(np.asarray(cmd.qdot) if cmd is not None else np.zeros(dof))
        cursor += dof
    for cid in hand_ids:
        dof = chains[cid].dof
        cmd = by_type[HandConfig].get(cid)
        parts.append(
            np.asarray(cmd.q) if cmd is not None else previous[cursor : cursor + dof]
        )
        cursor += dof
    parts.append(
        np.array([base.vx, base.vy, base.wz]) if base is not None else np.zeros(3)
    )
    cursor += 3
    parts.append(
        np.array([gimbal.yaw, gimbal.pitch])
        if gimbal is not None
        else previous[cursor : cursor + 2]
    )
    return np.concatenate(parts)


def _episode_widths(cfg: TeleopConfig, chains) -> int:
    width = sum(chains[m.chain_id].dof for m in cfg.arms.values())
    width += sum(chains[m.chain_id].dof for m in cfg.hands.values())
    return width + 5  # base (3) + gimbal (2)


def _joint_state_vector(state: SimState) -> np.ndarray:
    parts = [state.configurations[cid] for cid in sorted(state.configurations)]
    return np.concatenate(parts) if parts else np.zeros(0)


def run_session(
    packets: Sequence[TrackingPacket],
    cfg: TeleopConfig,
    rate_hz: float = DEFAULT_RATE_HZ,
    emulation: Optional[NetworkEmulation] = None,
    record_rate_hz: Optional[float] = None,
    initial: Optional[SimState] = None,
) -> SessionResult:
    """Run the whole control loop in virtual time over a recorded packet list.

    Ticks advance on an exact integer-nanosecond grid from the first arrival
    to the last; each tick consumes the newest arrival (sequence-guarded,
    exactly like the live slot) and sample-holds the previous packet when
    nothing new arrived. No clocks, no threads: two runs with the same
    inputs and seed produce identical state traces, byte for byte.
    """
    if not packets:
        raise EmptyStream("session has no packets")
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    arrivals = emulate_arrivals(packets, emulation)
    if not arrivals:
        raise EmptyStream("network emulation dropped every packet")

    chains = config_chains(cfg)
    if initial is None:
        initial = initial_sim_state(chains, t_ns=arrivals[0][0], homes=config_homes(cfg))
    sim = initial
    control = teleop_mod.initial_state(cfg)
    # integer-nanosecond tick grid, aligned with integer packet stamps
    period_ns = round(1e9 / rate_hz)
    dt = period_ns / 1e9
    start = arrivals[0][0]
    end = arrivals[-1][0]

    states: list[SimState] = []
    consumed: list[Optional[int]] = []
    state_samples: list[tuple[int, np.ndarray, int]] = []
    command_samples: list[tuple[int, np.ndarray]] = []
    previous_command = np.zeros(_episode_widths(cfg, chains))

    cursor = 0
    current: Optional[TrackingPacket] = None
    last_sequence: Optional[int] = None
    tick = 0
    while True:
        t = start + tick * period_ns
        if t > end:
            break
        # drain arrivals up to t into a depth-1 slot: the newest wins even if
        # it turns out stale, matching the live latest-only transport
        newest = None
        while cursor < len(arrivals) and arrivals[cursor][0] <= t:
            newest = arrivals[cursor][1]
            cursor += 1
        acted: Optional[int] = None
        if newest is not None:
            if last_sequence is None or newest.sequence > last_sequence:
                current = newest
                last_sequence = newest.sequence
            # else: regressed sequence — discard, keep holding `current`
        if current is not None:
            acted = current.sequence
            for cid in chains:
                control = control.with_configuration(cid, sim.configurations[cid])
            commands, control = teleop_mod.step(current, control, cfg)
            sim = sim_step(sim, commands, chains, dt=dt)
            previous_command = _episode_command_vector(commands, cfg, chains, previous_command)
        else:
            sim = replace(sim, t_ns=sim.t_ns + period_ns)
        states.append(sim)
        consumed.append(acted)
        state_samples.append((t, _joint_state_vector(sim), acted if acted is not None else -1))
        command_samples.append((t, previous_command))
        tick += 1

    episode = None
    if record_rate_hz is not None:
        episode = record_episode(
            state_samples,
            command_samples,
            rate_hz=record_rate_hz,
            metadata={"source": "sim_session", "control_rate_hz": rate_hz},
        )
    return SessionResult(states=tuple(states), consumed=tuple(consumed), episode=episode)


# --- live service ----------------------------------------------------------------------


class TeleopService:
    """Bidirectional websocket loop: packets in, simulated state frames out.

    Every connected client may push tracking packets (latest-only with a
    per-connection sequence guard) and receives the state stream. The control
    loop is the only thread that touches the simulation.
    """

    def __init__(
        self,
        cfg: TeleopConfig,
        host: str = "127.0.0.1",
        port: int = 8765,
        rate_hz: float = DEFAULT_RATE_HZ,
        session_path=None,
    ):
        self.cfg = cfg
        self.rate_hz = float(rate_hz)
        self.chains = config_chains(cfg)
        self.sim = initial_sim_state(self.chains, t_ns=now_ns(), homes=config_homes(cfg))
        self._control = teleop_mod.initial_state(cfg)
        self._packet_slot = _LatestSlot()
        self._clients: dict[int, _LatestSlot] = {}
        self._clients_lock = threading.Lock()
        self._next_client = 0
        self._stop = threading.Event()
        self.ticks = 0
        self.packets_in = 0

        self._session_file = open(session_path, "wb") if session_path else None
        self._session_lock = threading.Lock()
        if self._session_file:
            header = {"format": "tracking_session", "version": 1, "metadata": {}}
            self._session_file.write(
                json.dumps(header, separators=(",", ":")).encode() + b"\n"
            )

        from websockets.sync.server import serve

        try:
            self._server = serve(self._handler, host, port)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
        self._threads = [
            threading.Thread(target=self._server.serve_forever, name="service-ws", daemon=True),
            threading.Thread(target=self._control_loop, name="service-loop", daemon=True),
        ]
        for thread in self._threads:
            thread.start()

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.socket.getsockname()[:2]
        return host, port

    def submit(self, packet: TrackingPacket) -> None:
        """Feed a tracking packet from outside a websocket connection.

        Used when the loop subscribes to an upstream publisher instead of
        (or in addition to) clients pushing packets; latest-only like any
        other source.
        """
        self.packets_in += 1
        self._packet_slot.put(packet)
        if self._session_file:
            with self._session_lock:
                self._session_file.write(encode_packet(packet) + b"\n")

    def state_frame(self) -> bytes:
        """Current state as one canonical JSON frame (wall-clock stamped)."""
        return encode_state(replace(self.sim, t_ns=now_ns()))

    def _handler(self, conn):
        with self._clients_lock:
            client_id = self._next_client
            self._next_client += 1
            slot = _LatestSlot()
            self._clients[client_id] = slot
        sender = threading.Thread(
            target=self._send_loop, args=(conn, slot), name=f"service-send-{client_id}",
            daemon=True,
        )
        sender.start()
        last_sequence = None
        try:
            while not self._stop.is_set():
                try:
                    message = conn.recv(timeout=0.5)
                except TimeoutError:
                    continue
                payload = message.encode("utf-8") if isinstance(message, str) else message
                try:
                    packet = decode_packet(payload, last_sequence=last_sequence)
                except XrTeleopError as exc:
                    logger.warning("rejecting bad packet: %s", exc)
                    continue
                last_sequence = packet.sequence
                self.submit(packet)
        except Exception:
            pass  # connection closed
        finally:
            with self._clients_lock:
                self._clients.pop(client_id, None)
            slot.close()

    def _send_loop(self, conn, slot):
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
            pass

    def _control_loop(self):
        ticker = RateTicker(self.rate_hz)
        generation = 0
        current: Optional[TrackingPacket] = None
        dt = 1.0 / self.rate_hz
        while not self._stop.is_set():
            ticker.wait()
            entry = self._packet_slot.take(generation, timeout=0)
            if entry is not None:
                generation, current = entry
            if current is not None:
                for cid in self.chains:
                    self._control = self._control.with_configuration(
                        cid, self.sim.configurations[cid]
                    )
                try:
                    commands, self._control = teleop_mod.step(current, self._control, self.cfg)
                    self.sim = sim_step(self.sim, commands, self.chains, dt)
                except XrTeleopError as exc:
                    logger.warning("step failed, holding state: %s", exc)
            else:
                self.sim = replace(self.sim, t_ns=now_ns())
            frame = encode_state(replace(self.sim, t_ns=now_ns()))
            with self._clients_lock:
                slots = list(self._clients.values())
            for slot in slots:
                slot.put(frame)
            self.ticks += 1

    def stop(self):
        self._stop.set()
        with self._clients_lock:
            slots = list(self._clients.values())
        for slot in slots:
            slot.close()
        self._packet_slot.close()
        self._server.shutdown()
        if self._session_file:
            with self._session_lock:
                self._session_file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.stop()
