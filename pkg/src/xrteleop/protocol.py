"""Tracking-packet data model, JSON codec, and XR↔robot frame conversion.

One packet carries everything a headset knows at one instant: head pose and
mode, both controllers, both 26-joint hands, the 24-joint body estimate, and
any number of puck-style motion trackers. The wire form is a single UTF-8
JSON object; sections whose source is disabled are explicit nulls, never
absent keys, so the document shape is identical whatever is enabled.

Wire layout (canonical key order as emitted by encode_packet):

    {"timestamp": ns, "sequence": n,
     "head": {"pose": [7], "status": 0|1, "handMode": 0|1|2},
     "controllers": {"left": C|null, "right": C|null} | null,
     "hands": {"left": H|null, "right": H|null} | null,
     "body": {"joints": [24 entries]} | null,
     "trackers": [T, ...]}

    C = {"pose": [7], "axisX": f, "axisY": f, "axisClick": b, "grip": f,
         "trigger": f, "primaryButton": b, "secondaryButton": b,
         "menuButton": b, "side": "left"|"right"}
    H = {"isActive": 0|1, "scale": f, "HandJointLocations":
         [{"pose": [7], "status": n, "radius": f} x 26]}
    body entry = {"pose": [7], "velocity": [6], "acceleration": [6]}
    T = {"p": [7], "va": [6], "wva": [6], "sn": str}

A pose is seven floats: position xyz then quaternion xyzw, in the XR frame
(right-handed, x right, y up, z backward, origin at the head position when
the application launched). timestamp and sequence are transport extensions
for latency measurement and loss detection.

Decoding is lenient about unknown extra keys (ignored, forward compatible)
and strict about everything else. Quaternions are accepted with up to 1e-3
wire norm error and renormalized on ingest. The codec is pure and reentrant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import quat
from .errors import (
    ArityError,
    DegenerateQuaternion,
    InvariantViolation,
    MalformedJson,
    NonFiniteValue,
    RangeViolation,
    SchemaViolation,
    StaleSequence,
    UnknownConvention,
)
from .pose import Pose
from .retargeting import HAND_JOINT_COUNT

BODY_JOINT_COUNT = 24
LEFT = "left"
RIGHT = "right"

IDENTITY_POSE7 = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)

# wire tolerance: quaternion norms this far off unity are data errors, closer
# ones are float truncation and get renormalized silently
_WIRE_NORM_TOL = 1e-3
_DEGENERATE_NORM = 1e-6
_RENORM_SKIP = 1e-9

# refuse absurd inputs outright instead of feeding them to the JSON parser
MAX_PACKET_BYTES = 16 * 1024 * 1024


# --- construction-side checks (raise InvariantViolation) ----------------------


def _own_pose7(values, where: str) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if len(values) != 7:
        raise InvariantViolation(f"{where}: pose needs 7 numbers, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise InvariantViolation(f"{where}: non-finite pose component")
    norm = math.sqrt(sum(v * v for v in values[3:]))
    if norm < _DEGENERATE_NORM:
        raise InvariantViolation(f"{where}: degenerate quaternion (norm {norm:.2e})")
    if abs(norm - 1.0) > _WIRE_NORM_TOL:
        raise InvariantViolation(f"{where}: quaternion norm {norm} outside wire tolerance")
    if abs(norm - 1.0) > _RENORM_SKIP:
        values = values[:3] + tuple(v / norm for v in values[3:])
    return values


def _own_vec(values, length: int, where: str) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if len(values) != length:
        raise InvariantViolation(f"{where}: expected {length} numbers, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise InvariantViolation(f"{where}: non-finite component")
    return values


def _own_unit(value, where: str) -> float:
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise InvariantViolation(f"{where}: {value} outside [0, 1]")
    return value


def _own_axis(value, where: str) -> float:
    value = float(value)
    if not math.isfinite(value) or not -1.0 <= value <= 1.0:
        raise InvariantViolation(f"{where}: {value} outside [-1, 1]")
    return value


def _own_enum(value, allowed, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvariantViolation(f"{where}: expected integer, got {value!r}")
    if value not in allowed:
        raise InvariantViolation(f"{where}: {value} not in {sorted(allowed)}")
    return value


@dataclass(frozen=True)
class HeadState:
    """Headset pose with tracking confidence and active input mode."""

    pose: tuple[float, ...] = IDENTITY_POSE7
    status: int = 1
    hand_mode: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pose", _own_pose7(self.pose, "head.pose"))
        _own_enum(self.status, (0, 1), "head.status")
        _own_enum(self.hand_mode, (0, 1, 2), "head.handMode")


@dataclass(frozen=True)
class ControllerState:
    pose: tuple[float, ...]
    axis_x: float = 0.0
    axis_y: float = 0.0
    axis_click: bool = False
    grip: float = 0.0
    trigger: float = 0.0
    primary_button: bool = False
    secondary_button: bool = False
    menu_button: bool = False
    side: str = LEFT

    def __post_init__(self):
        object.__setattr__(self, "pose", _own_pose7(self.pose, "controller.pose"))
        object.__setattr__(self, "axis_x", _own_axis(self.axis_x, "controller.axisX"))
        object.__setattr__(self, "axis_y", _own_axis(self.axis_y, "controller.axisY"))
        object.__setattr__(self, "grip", _own_unit(self.grip, "controller.grip"))
        object.__setattr__(self, "trigger", _own_unit(self.trigger, "controller.trigger"))
        for name in ("axis_click", "primary_button", "secondary_button", "menu_button"):
            if not isinstance(getattr(self, name), bool):
                raise InvariantViolation(f"controller.{name}: expected boolean")
        if self.side not in (LEFT, RIGHT):
            raise InvariantViolation(f"controller.side: {self.side!r}")


@dataclass(frozen=True)
class HandJointEntry:
    pose: tuple[float, ...]
    status: int = 1
    radius: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "pose", _own_pose7(self.pose, "hand joint pose"))
        if isinstance(self.status, bool) or not isinstance(self.status, int) or self.status < 0:
            raise InvariantViolation(f"hand joint status: {self.status!r}")
        radius = float(self.radius)
        if not math.isfinite(radius) or radius < 0:
            raise InvariantViolation(f"hand joint radius: {self.radius!r}")
        object.__setattr__(self, "radius", radius)


@dataclass(frozen=True)
class HandState:
    is_active: int
    scale: float = 1.0
    joints: tuple[HandJointEntry, ...] = ()

    def __post_init__(self):
        _own_enum(self.is_active, (0, 1), "hand.isActive")
        scale = float(self.scale)
        if not math.isfinite(scale) or scale <= 0:
            raise InvariantViolation(f"hand.scale: {self.scale!r}")
        object.__setattr__(self, "scale", scale)
        joints = tuple(self.joints)
        if self.is_active and len(joints) != HAND_JOINT_COUNT:
            raise InvariantViolation(
                f"active hand needs {HAND_JOINT_COUNT} joints, got {len(joints)}"
            )
        if not self.is_active and len(joints) not in (0, HAND_JOINT_COUNT):
            raise InvariantViolation("inactive hand carries no joints or all of them")
        object.__setattr__(self, "joints", joints)


@dataclass(frozen=True)
class BodyJointEntry:
    pose: tuple[float, ...]
    velocity: tuple[float, ...] = (0.0,) * 6
    acceleration: tuple[float, ...] = (0.0,) * 6

    def __post_init__(self):
        object.__setattr__(self, "pose", _own_pose7(self.pose, "body joint pose"))
        object.__setattr__(self, "velocity", _own_vec(self.velocity, 6, "body joint velocity"))
        object.__setattr__(
            self, "acceleration", _own_vec(self.acceleration, 6, "body joint acceleration")
        )


@dataclass(frozen=True)
class BodyState:
    joints: tuple[BodyJointEntry, ...]

    def __post_init__(self):
        joints = tuple(self.joints)
        if len(joints) != BODY_JOINT_COUNT:
            raise InvariantViolation(
                f"body needs {BODY_JOINT_COUNT} joints, got {len(joints)}"
            )
        object.__setattr__(self, "joints", joints)


@dataclass(frozen=True)
class MotionTrackerState:
    """External tracker puck sample: pose p, velocities va, accelerations wva."""

    p: tuple[float, ...]
    va: tuple[float, ...] = (0.0,) * 6
    wva: tuple[float, ...] = (0.0,) * 6
    sn: str = ""

    def __post_init__(self):
        object.__setattr__(self, "p", _own_pose7(self.p, "tracker.p"))
        object.__setattr__(self, "va", _own_vec(self.va, 6, "tracker.va"))
        object.__setattr__(self, "wva", _own_vec(self.wva, 6, "tracker.wva"))
        if not isinstance(self.sn, str) or not self.sn:
            raise InvariantViolation("tracker.sn must be a non-empty string")


@dataclass(frozen=True)
class SidePair:
    """Left/right slot pair for controllers or hands; either side may be off."""

    left: Optional[object] = None
    right: Optional[object] = None


@dataclass(frozen=True)
class TrackingPacket:
    timestamp: int
    sequence: int
    head: HeadState
    controllers: Optional[SidePair] = None
    hands: Optional[SidePair] = None
    body: Optional[BodyState] = None
    trackers: tuple[MotionTrackerState, ...] = ()

    def __post_init__(self):
        for name in ("timestamp", "sequence"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvariantViolation(f"{name} must be an integer")
            if value < 0:
                raise InvariantViolation(f"{name} must be >= 0")
        object.__setattr__(self, "trackers", tuple(self.trackers))


# --- encoding -----------------------------------------------------------------


def _controller_obj(c: ControllerState) -> dict:
    return {
        "pose": list(c.pose),
        "axisX": c.axis_x,
        "axisY": c.axis_y,
        "axisClick": c.axis_click,
        "grip": c.grip,
        "trigger": c.trigger,
        "primaryButton": c.primary_button,
        "secondaryButton": c.secondary_button,
        "menuButton": c.menu_button,
        "side": c.side,
    }


def _hand_obj(h: HandState) -> dict:
    return {
        "isActive": h.is_active,
        "scale": h.scale,
        "HandJointLocations": [
            {"pose": list(j.pose), "status": j.status, "radius": j.radius} for j in h.joints
        ],
    }


def _pair_obj(pair: Optional[SidePair], one) -> Optional[dict]:
    if pair is None:
        return None
    return {
        "left": one(pair.left) if pair.left is not None else None,
        "right": one(pair.right) if pair.right is not None else None,
    }


def encode_packet(packet: TrackingPacket) -> bytes:
    """Canonical UTF-8 JSON bytes; decode_packet(encode_packet(p)) == p."""
    seen = set()
    for t in packet.trackers:
        if t.sn in seen:
            raise InvariantViolation(f"duplicate tracker serial {t.sn!r}")
        seen.add(t.sn)
    obj = {
        "timestamp": packet.timestamp,
        "sequence": packet.sequence,
        "head": {
            "pose": list(packet.head.pose),
            "status": packet.head.status,
            "handMode": packet.head.hand_mode,
        },
        "controllers": _pair_obj(packet.controllers, _controller_obj),
        "hands": _pair_obj(packet.hands, _hand_obj),
        "body": (
            {
                "joints": [
                    {
                        "pose": list(j.pose),
                        "velocity": list(j.velocity),
                        "acceleration": list(j.acceleration),
                    }
                    for j in packet.body.joints
                ]
            }
            if packet.body is not None
            else None
        ),
        "trackers": [
            {"p": list(t.p), "va": list(t.va), "wva": list(t.wva), "sn": t.sn}
            for t in packet.trackers
        ],
    }
    try:
        return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False).encode(
            "utf-8"
        )
    except ValueError as exc:  # unreachable when invariants hold; belt and braces
        raise InvariantViolation(f"packet not serializable: {exc}") from exc


# --- decoding -----------------------------------------------------------------


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaViolation(f"{where}: missing required key {key!r}")
    return obj[key]


def _as_object(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(f"{where}: expected an object, got {type(value).__name__}")
    return value


def _as_list(value, where: str) -> list:
    if not isinstance(value, list):
        raise SchemaViolation(f"{where}: expected an array, got {type(value).__name__}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(f"{where}: expected a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteValue(f"{where}: non-finite number")
    return value


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(f"{where}: expected an integer, got {type(value).__name__}")
    return value


def _as_bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaViolation(f"{where}: expected a boolean, got {type(value).__name__}")
    return value


def _as_str(value, where: str) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(f"{where}: expected a string, got {type(value).__name__}")
    return value


def _in_range(value, lo: float, hi: float, where: str) -> float:
    value = _as_number(value, where)
    if not lo <= value <= hi:
        raise RangeViolation(f"{where}: {value} outside [{lo}, {hi}]")
    return value


def _wire_pose7(value, where: str) -> tuple[float, ...]:
    items = _as_list(value, where)
    if len(items) != 7:
        raise ArityError(f"{where}: pose needs 7 numbers, got {len(items)}")
    values = tuple(_as_number(v, f"{where}[{i}]") for i, v in enumerate(items))
    norm = math.sqrt(sum(v * v for v in values[3:]))
    if norm < _DEGENERATE_NORM:
        raise DegenerateQuaternion(f"{where}: quaternion norm {norm:.2e}")
    if abs(norm - 1.0) > _WIRE_NORM_TOL:
        raise RangeViolation(f"{where}: quaternion norm {norm} outside wire tolerance")
    return values


def _wire_vec6(value, where: str) -> tuple[float, ...]:
    items = _as_list(value, where)
    if len(items) != 6:
        raise ArityError(f"{where}: expected 6 numbers, got {len(items)}")
    return tuple(_as_number(v, f"{where}[{i}]") for i, v in enumerate(items))


def _decode_head(value) -> HeadState:
    obj = _as_object(value, "head")
    status = _as_int(_need(obj, "status", "head"), "head.status")
    mode = _as_int(_need(obj, "handMode", "head"), "head.handMode")
    if status not in (0, 1):
        raise RangeViolation(f"head.status: {status} not in [0, 1]")
    if mode not in (0, 1, 2):
        raise RangeViolation(f"head.handMode: {mode} not in [0, 2]")
    return HeadState(
        pose=_wire_pose7(_need(obj, "pose", "head"), "head.pose"),
        status=status,
        hand_mode=mode,
    )


def _decode_controller(value, where: str, side: str) -> ControllerState:
    obj = _as_object(value, where)
    declared = _as_str(_need(obj, "side", where), f"{where}.side")
    if declared != side:
        raise SchemaViolation(f"{where}: side field says {declared!r}")
    return ControllerState(
        pose=_wire_pose7(_need(obj, "pose", where), f"{where}.pose"),
        axis_x=_in_range(_need(obj, "axisX", where), -1.0, 1.0, f"{where}.axisX"),
        axis_y=_in_range(_need(obj, "axisY", where), -1.0, 1.0, f"{where}.axisY"),
        axis_click=_as_bool(_need(obj, "axisClick", where), f"{where}.axisClick"),
        grip=_in_range(_need(obj, "grip", where), 0.0, 1.0, f"{where}.grip"),
        trigger=_in_range(_need(obj, "trigger", where), 0.0, 1.0, f"{where}.trigger"),
        primary_button=_as_bool(_need(obj, "primaryButton", where), f"{where}.primaryButton"),
        secondary_button=_as_bool(
            _need(obj, "secondaryButton", where), f"{where}.secondaryButton"
        ),
        menu_button=_as_bool(_need(obj, "menuButton", where), f"{where}.menuButton"),
        side=declared,
    )


def _decode_hand(value, where: str, side: str) -> HandState:
    # hands carry no side field; the pair slot alone is authoritative
    del side
    obj = _as_object(value, where)
    active = _as_int(_need(obj, "isActive", where), f"{where}.isActive")
    if active not in (0, 1):
        raise RangeViolation(f"{where}.isActive: {active} not in [0, 1]")
    scale = _as_number(_need(obj, "scale", where), f"{where}.scale")
    if scale <= 0:
        raise RangeViolation(f"{where}.scale: {scale} must be > 0")
    joints_raw = _as_list(_need(obj, "HandJointLocations", where), f"{where}.HandJointLocations")
    if len(joints_raw) != HAND_JOINT_COUNT and not (not active and len(joints_raw) == 0):
        raise SchemaViolation(
            f"{where}.HandJointLocations: expected {HAND_JOINT_COUNT} entries, "
            f"got {len(joints_raw)}"
        )
    joints = []
    for i, raw in enumerate(joints_raw):
        jw = f"{where}.HandJointLocations[{i}]"
        jobj = _as_object(raw, jw)
        status = _as_int(_need(jobj, "status", jw), f"{jw}.status")
        if status < 0:
            raise RangeViolation(f"{jw}.status: must be >= 0")
        radius = _as_number(_need(jobj, "radius", jw), f"{jw}.radius")
        if radius < 0:
            raise RangeViolation(f"{jw}.radius: must be >= 0")
        joints.append(
            HandJointEntry(
                pose=_wire_pose7(_need(jobj, "pose", jw), f"{jw}.pose"),
                status=status,
                radius=radius,
            )
        )
    return HandState(is_active=active, scale=scale, joints=tuple(joints))


def _decode_pair(value, where: str, one) -> Optional[SidePair]:
    if value is None:
        return None
    obj = _as_object(value, where)
    sides = {}
    for side in (LEFT, RIGHT):
        raw = _need(obj, side, where)
        sides[side] = None if raw is None else one(raw, f"{where}.{side}", side)
    return SidePair(left=sides[LEFT], right=sides[RIGHT])


def _decode_body(value) -> Optional[BodyState]:
    if value is None:
        return None
    obj = _as_object(value, "body")
    joints_raw = _as_list(_need(obj, "joints", "body"), "body.joints")
    if len(joints_raw) != BODY_JOINT_COUNT:
        raise SchemaViolation(
            f"body.joints: expected {BODY_JOINT_COUNT} entries, got {len(joints_raw)}"
        )
    joints = []
    for i, raw in enumerate(joints_raw):
        jw = f"body.joints[{i}]"
        jobj = _as_object(raw, jw)
        joints.append(
            BodyJointEntry(
                pose=_wire_pose7(_need(jobj, "pose", jw), f"{jw}.pose"),
                velocity=_wire_vec6(_need(jobj, "velocity", jw), f"{jw}.velocity"),
                acceleration=_wire_vec6(
                    _need(jobj, "acceleration", jw), f"{jw}.acceleration"
                ),
            )
        )
    return BodyState(joints=tuple(joints))


def _decode_trackers(value) -> tuple[MotionTrackerState, ...]:
    items = _as_list(value, "trackers")
    trackers = []
    seen = set()
    for i, raw in enumerate(items):
        tw = f"trackers[{i}]"
        obj = _as_object(raw, tw)
        sn = _as_str(_need(obj, "sn", tw), f"{tw}.sn")
        if not sn:
            raise SchemaViolation(f"{tw}.sn: must be non-empty")
        if sn in seen:
            raise SchemaViolation(f"{tw}.sn: duplicate serial {sn!r}")
        seen.add(sn)
        trackers.append(
            MotionTrackerState(
                p=_wire_pose7(_need(obj, "p", tw), f"{tw}.p"),
                va=_wire_vec6(_need(obj, "va", tw), f"{tw}.va"),
                wva=_wire_vec6(_need(obj, "wva", tw), f"{tw}.wva"),
                sn=sn,
            )
        )
    return tuple(trackers)


def _reject_json_constant(name: str):
    raise MalformedJson(f"non-finite JSON constant {name!r} not allowed")


def decode_packet(data: bytes, last_sequence: Optional[int] = None) -> TrackingPacket:
    """Parse and validate wire bytes; never crashes on garbage, only raises.

    With last_sequence given, a sequence that fails to increase raises
    StaleSequence so stream consumers can drop reordered frames.
    """
    if not isinstance(data, (bytes, bytearray)):
        raise MalformedJson(f"expected bytes, got {type(data).__name__}")
    if len(data) > MAX_PACKET_BYTES:
        raise MalformedJson(f"packet of {len(data)} bytes exceeds limit")
    try:
        obj = json.loads(data.decode("utf-8"), parse_constant=_reject_json_constant)
    except (UnicodeDecodeError, ValueError, RecursionError) as exc:
        if isinstance(exc, MalformedJson):
            raise
        raise MalformedJson(str(exc)) from exc
    obj = _as_object(obj, "packet")

    timestamp = _as_int(_need(obj, "timestamp", "packet"), "timestamp")
    sequence = _as_int(_need(obj, "sequence", "packet"), "sequence")
    if timestamp < 0:
        raise RangeViolation("timestamp: must be >= 0")
    if sequence < 0:
        raise RangeViolation("sequence: must be >= 0")
    if last_sequence is not None and sequence <= last_sequence:
        raise StaleSequence(f"sequence {sequence} after {last_sequence}")

    return TrackingPacket(
        timestamp=timestamp,
        sequence=sequence,
        head=_decode_head(_need(obj, "head", "packet")),
        controllers=_decode_pair(_need(obj, "controllers", "packet"), "controllers",
                                 _decode_controller),
        hands=_decode_pair(_need(obj, "hands", "packet"), "hands", _decode_hand),
        body=_decode_body(_need(obj, "body", "packet")),
        trackers=_decode_trackers(_need(obj, "trackers", "packet")),
    )


# --- pose ingestion and frame conversion ---------------------------------------


def parse_pose7(values: Sequence[float]) -> Pose:
    """Seven wire floats to a Pose; lenient renormalization of the quaternion.

    Unlike packet validation this accepts any quaternion norm down to 1e-6,
    because replayed or hand-written fixtures are often stored rounded.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.shape != (7,):
        raise ArityError(f"pose needs exactly 7 numbers, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("pose contains non-finite values")
    norm = float(np.linalg.norm(arr[3:]))
    if norm < _DEGENERATE_NORM:
        raise DegenerateQuaternion(f"quaternion norm {norm:.2e} below 1e-6")
    return Pose(arr[:3], arr[3:])


def pose_to_pose7(pose: Pose) -> tuple[float, ...]:
    return tuple(float(v) for v in pose.to_pose7())


@dataclass(frozen=True)
class FrameConvention:
    """A fixed proper rotation taking XR coordinates to robot coordinates."""

    name: str
    matrix: np.ndarray
    orientation: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"convention {self.name!r}: matrix must be 3x3")
        if not np.allclose(m @ m.T, np.eye(3), atol=1e-9) or np.linalg.det(m) < 0:
            raise ValueError(f"convention {self.name!r}: not a proper rotation")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        orientation = quat.normalize(quat.from_matrix(m))
        orientation.setflags(write=False)
        object.__setattr__(self, "orientation", orientation)


# default: XR (x right, y up, z backward) to robot (x forward, y left, z up):
# x_r = -z_xr, y_r = -x_xr, z_r = y_xr
_CONVENTIONS: dict[str, FrameConvention] = {}


def register_convention(name: str, matrix) -> FrameConvention:
    if not name:
        raise ValueError("convention name must be non-empty")
    convention = FrameConvention(name, matrix)
    _CONVENTIONS[name] = convention
    return convention


register_convention("xr_to_robot", [[0.0, 0.0, -1.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
register_convention("identity", np.eye(3))


def get_convention(name: str) -> FrameConvention:
    try:
        return _CONVENTIONS[name]
    except KeyError:
        raise UnknownConvention(
            f"no frame convention {name!r} (registered: {sorted(_CONVENTIONS)})"
        ) from None


def xr_to_robot(pose: Pose, convention: Union[str, FrameConvention] = "xr_to_robot") -> Pose:
    """Rigid change of basis: R p for position, R-conjugation for orientation."""
    if isinstance(convention, str):
        convention = get_convention(convention)
    r = convention.orientation
    return Pose(
        convention.matrix @ pose.position,
        quat.multiply(r, quat.multiply(pose.orientation, quat.conjugate(r))),
    )
