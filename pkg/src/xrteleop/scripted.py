"""Scripted operator sessions: synthetic tracking streams with known answers.

Each generator plays a canned right-controller motion at the packet rate and
returns the packets together with the ground truth a test (or demo) needs to
judge the loop: where the device was commanded to be, and when the plant has
had time to settle there. All poses are in device (XR) coordinates; the
router's frame convention decides what they mean to the robot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import ControllerState, HeadState, SidePair, TrackingPacket

DEFAULT_RATE_HZ = 90.0


@dataclass(frozen=True)
class Mark:
    """A moment worth checking: tick index plus the commanded device position."""

    name: str
    index: int
    position: tuple[float, float, float]


@dataclass(frozen=True)
class ScriptedSession:
    packets: tuple[TrackingPacket, ...]
    marks: tuple[Mark, ...]
    engage_index: int  # first packet with the grip pressed
    rate_hz: float

    def mark(self, name: str) -> Mark:
        for mark in self.marks:
            if mark.name == name:
                return mark
        raise KeyError(name)


def _controller_packet(sequence: int, period_ns: int, position, grip: float) -> TrackingPacket:
    pose = tuple(float(v) for v in position) + (0.0, 0.0, 0.0, 1.0)
    return TrackingPacket(
        timestamp=sequence * period_ns,
        sequence=sequence,
        head=HeadState(),
        controllers=SidePair(right=ControllerState(pose=pose, grip=grip, side="right")),
    )


def _session(positions, grips, marks, rate_hz) -> ScriptedSession:
    period_ns = round(1e9 / rate_hz)
    packets = tuple(
        _controller_packet(k, period_ns, p, g) for k, (p, g) in enumerate(zip(positions, grips))
    )
    engage = next(k for k, g in enumerate(grips) if g >= 0.9)
    return ScriptedSession(
        packets=packets, marks=tuple(marks), engage_index=engage, rate_hz=rate_hz
    )


def square_path_session(
    side: float = 0.08,
    speed: float = 0.04,
    dwell_s: float = 0.75,
    lead_s: float = 0.25,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> ScriptedSession:
    """Trace a square in the device x-y plane, pausing at every corner.

    The grip engages after a short lead-in at the origin corner; each edge
    runs at constant speed and each corner holds for dwell_s so the arm can
    settle — the corner marks point at the last dwell tick, where the
    end-effector should sit on the commanded corner.
    """
    if side <= 0 or speed <= 0:
        raise ValueError("side and speed must be positive")
    lead = max(1, round(lead_s * rate_hz))
    edge = max(1, round(side / speed * rate_hz))
    dwell = max(1, round(dwell_s * rate_hz))

    corners = [
        (0.0, 0.0, 0.0),
        (side, 0.0, 0.0),
        (side, side, 0.0),
        (0.0, side, 0.0),
        (0.0, 0.0, 0.0),
    ]
    positions = [corners[0]] * lead
    grips = [0.0] * lead
    marks = []

    def dwell_at(corner, name):
        positions.extend([corner] * dwell)
        grips.extend([1.0] * dwell)
        marks.append(Mark(name, len(positions) - 1, corner))

    dwell_at(corners[0], "corner0")
    for i in range(4):
        a = np.array(corners[i])
        b = np.array(corners[i + 1])
        for k in range(1, edge + 1):
            positions.append(tuple(a + (b - a) * (k / edge)))
            grips.append(1.0)
        dwell_at(corners[i + 1], f"corner{i + 1}")
    return _session(positions, grips, marks, rate_hz)


def smooth_line_session(
    distance: float = 0.08,
    duration_s: float = 2.0,
    hold_s: float = 0.7,
    lead_s: float = 0.25,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> ScriptedSession:
    """Glide forward (device -z) along a cosine-eased straight line, then hold.

    Peak speed is distance·π/(2·duration): the defaults stay under 0.1 m/s.
    The "settled" mark points at the last hold tick for steady-state checks.
    """
    if distance <= 0 or duration_s <= 0:
        raise ValueError("distance and duration must be positive")
    lead = max(1, round(lead_s * rate_hz))
    move = max(2, round(duration_s * rate_hz))
    hold = max(1, round(hold_s * rate_hz))

    positions = [(0.0, 0.0, 0.0)] * lead
    grips = [0.0] * lead
    positions.append((0.0, 0.0, 0.0))
    grips.append(1.0)
    for k in range(1, move + 1):
        s = 0.5 * distance * (1.0 - math.cos(math.pi * k / move))
        positions.append((0.0, 0.0, -s))
        grips.append(1.0)
    positions.extend([(0.0, 0.0, -distance)] * hold)
    grips.extend([1.0] * hold)
    marks = [Mark("settled", len(positions) - 1, (0.0, 0.0, -distance))]
    return _session(positions, grips, marks, rate_hz)
