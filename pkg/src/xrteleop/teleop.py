"""XR tracking state to robot commands: the mode router.

One step() call turns one validated tracking packet into a command list:

- controllers with the grip held drive arm end-effectors through clutched
  relative targets and the differential-IK solver (grip hysteresis 0.9
  rising / 0.7 falling, so an analog grip hovering near the threshold never
  chatters the clutch);
- motion trackers matched by serial number join the same IK solve as
  weighted position tasks (elbow pucks and the like);
- hand tracking (input mode 2) routes through fingertip retargeting to
  dexterous-hand configurations;
- joysticks always map to base velocities, head orientation to pan/tilt
  angles, triggers to gripper values.

step is a pure function of (packet, state, config): same inputs, same
commands, no clocks and no hidden state. Solver failures for one command
become CommandFailure entries instead of aborting the rest of the step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from . import ik, quat
from .chain import KinematicChain, parse_chain
from .errors import (
    DimensionMismatch,
    RangeViolation,
    UnknownFrame,
    UnreliableTracking,
    XrTeleopError,
)
from .ik import DISENGAGED, ClutchState, ConstraintSet, IkParams, Task
from .kinematics import forward_kinematics
from .protocol import (
    LEFT,
    RIGHT,
    HeadState,
    TrackingPacket,
    parse_pose7,
    xr_to_robot,
)
from .retargeting import (
    HandFrame,
    HandJoint,
    RetargetMap,
    RetargetParams,
    RetargetState,
    map_from_dict,
    solve_retarget,
)

logger = logging.getLogger(__name__)

# grip hysteresis: press when crossing 0.9 upward, release below 0.7
GRIP_PRESS = 0.9
GRIP_RELEASE = 0.7
STICK_DEADZONE = 0.05

HAND_MODE_NONE = 0
HAND_MODE_CONTROLLER = 1
HAND_MODE_TRACKING = 2

_SIDES = (LEFT, RIGHT)


# --- commands ---------------------------------------------------------------------


@dataclass(frozen=True)
class ArmVelocity:
    chain_id: str
    qdot: np.ndarray

    def __post_init__(self):
        qdot = np.asarray(self.qdot, dtype=float)
        qdot.setflags(write=False)
        object.__setattr__(self, "qdot", qdot)


@dataclass(frozen=True)
class HandConfig:
    chain_id: str
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class BaseVelocity:
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0


@dataclass(frozen=True)
class GimbalAngles:
    yaw: float = 0.0
    pitch: float = 0.0


@dataclass(frozen=True)
class Gripper:
    side: str
    value: float

    def __post_init__(self):
        if self.side not in _SIDES:
            raise ValueError(f"unknown side {self.side!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"gripper value {self.value} outside [0, 1]")


@dataclass(frozen=True)
class CommandFailure:
    """A solver error scoped to one command; the rest of the step proceeds."""

    source: str
    reason: str


RobotCommand = Union[ArmVelocity, HandConfig, BaseVelocity, GimbalAngles, Gripper, CommandFailure]


# --- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class BaseLimits:
    v_max: float = 0.5  # m/s
    w_max: float = 1.0  # rad/s

    def __post_init__(self):
        for name in ("v_max", "w_max"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class GimbalLimits:
    yaw: tuple[float, float] = (-2.0, 2.0)
    pitch: tuple[float, float] = (-1.2, 1.2)

    def __post_init__(self):
        for name in ("yaw", "pitch"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} range ({lo}, {hi}) is not an interval")
            object.__setattr__(self, name, (float(lo), float(hi)))


@dataclass(frozen=True)
class GripperCurve:
    """Piecewise-linear trigger-to-gripper map over [0, 1]; default identity."""

    points: tuple[tuple[float, float], ...] = ((0.0, 0.0), (1.0, 1.0))

    def __post_init__(self):
        points = tuple((float(x), float(y)) for x, y in self.points)
        if len(points) < 2:
            raise ValueError("curve needs at least two points")
        xs = [x for x, _ in points]
        if xs[0] != 0.0 or xs[-1] != 1.0 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("curve inputs must rise strictly from 0 to 1")
        if any(not 0.0 <= y <= 1.0 for _, y in points):
            raise ValueError("curve outputs must stay inside [0, 1]")
        object.__setattr__(self, "points", points)

    def apply(self, trigger: float) -> float:
        xs = [x for x, _ in self.points]
        ys = [y for _, y in self.points]
        return float(np.interp(trigger, xs, ys))


@dataclass(frozen=True)
class ArmMapping:
    """One controller side driving one chain's end-effector frame."""

    chain: KinematicChain
    ee_frame: str
    chain_id: str = ""
    params: IkParams = field(default_factory=lambda: IkParams(dt=1.0 / 90.0))
    constraints: ConstraintSet = None
    home: Optional[np.ndarray] = None  # start configuration; default all-zero

    def __post_init__(self):
        if not self.chain.has_frame(self.ee_frame):
            raise UnknownFrame(f"chain {self.chain.name!r} has no frame {self.ee_frame!r}")
        if not self.chain_id:
            object.__setattr__(self, "chain_id", self.chain.name)
        if self.constraints is None:
            object.__setattr__(self, "constraints", ConstraintSet.from_chain(self.chain))
        if self.home is not None:
            object.__setattr__(self, "home", _validated_home(self.chain, self.home))


@dataclass(frozen=True)
class HandMapping:
    """One tracked hand driving one dexterous-hand chain via retargeting."""

    chain: KinematicChain
    map: RetargetMap
    chain_id: str = ""
    params: RetargetParams = field(default_factory=RetargetParams)
    home: Optional[np.ndarray] = None

    def __post_init__(self):
        self.map.check_frames(self.chain)
        if not self.chain_id:
            object.__setattr__(self, "chain_id", self.chain.name)
        if self.home is not None:
            object.__setattr__(self, "home", _validated_home(self.chain, self.home))


def _validated_home(chain: KinematicChain, home) -> np.ndarray:
    home = np.asarray(home, dtype=float)
    if home.shape != (chain.dof,):
        raise DimensionMismatch(
            f"home configuration has {home.shape} entries, chain {chain.name!r} has dof {chain.dof}"
        )
    lo, hi = chain.position_limits()
    if not np.all(np.isfinite(home)) or np.any(home < lo) or np.any(home > hi):
        raise RangeViolation(f"home configuration outside joint limits of {chain.name!r}")
    home.setflags(write=False)
    return home


@dataclass(frozen=True)
class TrackerMapping:
    """A motion-tracker serial pinned to a frame of one arm's chain."""

    side: str
    frame: str
    weight: float = 1.0

    def __post_init__(self):
        if self.side not in _SIDES:
            raise ValueError(f"unknown side {self.side!r}")
        if not (np.isfinite(self.weight) and self.weight > 0):
            raise ValueError(f"tracker weight must be > 0, got {self.weight}")


@dataclass(frozen=True)
class TeleopConfig:
    arms: Mapping[str, ArmMapping] = field(default_factory=dict)
    hands: Mapping[str, HandMapping] = field(default_factory=dict)
    trackers: Mapping[str, TrackerMapping] = field(default_factory=dict)  # keyed by sn
    base: BaseLimits = field(default_factory=BaseLimits)
    gimbal: GimbalLimits = field(default_factory=GimbalLimits)
    gripper_curve: GripperCurve = field(default_factory=GripperCurve)
    convention: str = "xr_to_robot"

    def __post_init__(self):
        for table in (self.arms, self.hands):
            for side in table:
                if side not in _SIDES:
                    raise ValueError(f"unknown side {side!r}")
        for sn, tracker in self.trackers.items():
            arm = self.arms.get(tracker.side)
            if arm is None:
                raise ValueError(f"tracker {sn!r} references unmapped side {tracker.side!r}")
            if not arm.chain.has_frame(tracker.frame):
                raise UnknownFrame(
                    f"tracker {sn!r}: chain {arm.chain.name!r} has no frame {tracker.frame!r}"
                )


# --- state ------------------------------------------------------------------------


@dataclass(frozen=True)
class TeleopState:
    """Everything step() carries between packets; treat the maps as immutable.

    `configurations` is robot state feedback — the loop around step() refreshes
    it from the plant (or the simulator) before each call.
    """

    clutches: Mapping[str, ClutchState]
    configurations: Mapping[str, np.ndarray]
    retarget: Mapping[str, RetargetState]
    gimbal_hold: Optional[GimbalAngles] = None

    def with_configuration(self, chain_id: str, q) -> "TeleopState":
        configurations = dict(self.configurations)
        configurations[chain_id] = np.asarray(q, dtype=float)
        return TeleopState(self.clutches, configurations, self.retarget, self.gimbal_hold)


def initial_state(cfg: TeleopConfig, configurations: Optional[Mapping] = None) -> TeleopState:
    q0 = {m.chain_id: m.chain.zero_configuration() for m in cfg.arms.values()}
    if configurations:
        for chain_id, q in configurations.items():
            q0[chain_id] = np.asarray(q, dtype=float)
    retarget = {m.chain_id: RetargetState.from_chain(m.chain) for m in cfg.hands.values()}
    return TeleopState(
        clutches={side: DISENGAGED for side in _SIDES},
        configurations=q0,
        retarget=retarget,
        gimbal_hold=None,
    )


# --- direct mappings ----------------------------------------------------------------


def map_joystick_to_base(
    axis_lx: float, axis_ly: float, axis_rx: float, limits: BaseLimits
) -> BaseVelocity:
    """Left stick to planar velocity, right stick X to turn rate.

    Forward on the left stick is +x, leftward deflection is +y, and pushing
    the right stick right turns clockwise (negative z rate). The deadzone is
    radial on the left stick and scalar on the right axis.
    """
    for name, value in (("axisLX", axis_lx), ("axisLY", axis_ly), ("axisRX", axis_rx)):
        if not np.isfinite(value) or abs(value) > 1.0:
            raise RangeViolation(f"{name}: {value!r} outside [-1, 1]")
    if math.hypot(axis_lx, axis_ly) < STICK_DEADZONE:
        axis_lx = axis_ly = 0.0
    if abs(axis_rx) < STICK_DEADZONE:
        axis_rx = 0.0
    return BaseVelocity(
        vx=axis_ly * limits.v_max,
        vy=-axis_lx * limits.v_max,
        wz=-axis_rx * limits.w_max,
    )


def map_head_to_gimbal(
    head: HeadState, limits: GimbalLimits, convention: str = "xr_to_robot"
) -> GimbalAngles:
    """Pan/tilt angles from the head orientation; roll is deliberately dropped.

    The orientation moves into robot coordinates first, then splits by the
    intrinsic yaw-then-pitch decomposition a pan-tilt mechanism realizes.
    A two-angle head cannot reproduce roll, so the third angle is discarded
    rather than folded into the other two.
    """
    if head.status == 0:
        raise UnreliableTracking("head tracking unreliable; hold the previous angles")
    pose = xr_to_robot(parse_pose7(head.pose), convention)
    m = quat.to_matrix(pose.orientation)
    yaw = math.atan2(m[1, 0], m[0, 0])
    pitch = math.asin(min(1.0, max(-1.0, -m[2, 0])))
    return GimbalAngles(
        yaw=min(max(yaw, limits.yaw[0]), limits.yaw[1]),
        pitch=min(max(pitch, limits.pitch[0]), limits.pitch[1]),
    )


def hand_frame_from_state(hand, convention: str = "xr_to_robot") -> HandFrame:
    """Wire-format hand state to a solver-ready frame in robot coordinates."""
    joints = tuple(
        HandJoint(
            pose=xr_to_robot(parse_pose7(j.pose), convention),
            status=j.status,
            radius=j.radius,
        )
        for j in hand.joints
    )
    return HandFrame(is_active=bool(hand.is_active), scale=hand.scale, joints=joints)


# --- the router -----------------------------------------------------------------------


def _tracker_tasks(packet: TrackingPacket, cfg: TeleopConfig, side: str) -> list[Task]:
    tasks = []
    for sn, mapping in cfg.trackers.items():
        if mapping.side != side:
            continue
        sample = next((t for t in packet.trackers if t.sn == sn), None)
        if sample is None:
            continue  # puck absent this packet: the task simply drops out
        target = xr_to_robot(parse_pose7(sample.p), cfg.convention)
        tasks.append(
            Task(mapping.frame, target, weight=mapping.weight, kind=ik.FRAME_POSITION)
        )
    return tasks


def _step_arm(packet, ctrl, side, cfg, state, clutches, commands):
    mapping = cfg.arms[side]
    q = state.configurations[mapping.chain_id]
    device = xr_to_robot(parse_pose7(ctrl.pose), cfg.convention)
    clutch = clutches.get(side, DISENGAGED)
    if not clutch.engaged and ctrl.grip >= GRIP_PRESS:
        # anchor at the *current* end effector: the first target equals the
        # present pose exactly, so engagement cannot jump
        ee = forward_kinematics(mapping.chain, q, mapping.ee_frame)
        clutch = ik.clutch_engage(device, ee)
    elif clutch.engaged and ctrl.grip <= GRIP_RELEASE:
        clutch = ik.clutch_release(clutch)
    clutches[side] = clutch
    if not clutch.engaged:
        return
    target = ik.clutched_target(clutch, device)
    tasks = [Task(mapping.ee_frame, target)] + _tracker_tasks(packet, cfg, side)
    solution = ik.solve_dik(mapping.chain, q, tasks, mapping.constraints, mapping.params)
    commands.append(ArmVelocity(mapping.chain_id, solution.qdot))


def _step_hand(hand, side, cfg, retarget_states, commands):
    mapping = cfg.hands[side]
    frame = hand_frame_from_state(hand, cfg.convention)
    if not frame.is_active:
        return  # tracking loss: hold the last configuration by commanding nothing
    hand_state = retarget_states.get(mapping.chain_id)
    if hand_state is None:
        hand_state = RetargetState.from_chain(mapping.chain)
    q = solve_retarget(mapping.chain, frame, mapping.map, hand_state, mapping.params)
    retarget_states[mapping.chain_id] = hand_state.advanced(q)
    commands.append(HandConfig(mapping.chain_id, q))


def step(
    packet: TrackingPacket, state: TeleopState, cfg: TeleopConfig
) -> tuple[list[RobotCommand], TeleopState]:
    """Route one packet to commands; returns (commands, advanced state)."""
    commands: list[RobotCommand] = []
    clutches = dict(state.clutches)
    retarget_states = dict(state.retarget)
    gimbal_hold = state.gimbal_hold

    left = packet.controllers.left if packet.controllers else None
    right = packet.controllers.right if packet.controllers else None
    for side, ctrl in ((LEFT, left), (RIGHT, right)):
        if ctrl is None:
            continue
        if side in cfg.arms:
            try:
                _step_arm(packet, ctrl, side, cfg, state, clutches, commands)
            except XrTeleopError as exc:
                commands.append(CommandFailure(f"arm.{side}", str(exc)))
        commands.append(Gripper(side, cfg.gripper_curve.apply(ctrl.trigger)))

    if packet.head.hand_mode == HAND_MODE_TRACKING and packet.hands is not None:
        for side, hand in ((LEFT, packet.hands.left), (RIGHT, packet.hands.right)):
            if hand is not None and side in cfg.hands:
                try:
                    _step_hand(hand, side, cfg, retarget_states, commands)
                except XrTeleopError as exc:
                    commands.append(CommandFailure(f"hand.{side}", str(exc)))

    commands.append(
        map_joystick_to_base(
            left.axis_x if left else 0.0,
            left.axis_y if left else 0.0,
            right.axis_x if right else 0.0,
            cfg.base,
        )
    )

    try:
        angles = map_head_to_gimbal(packet.head, cfg.gimbal, cfg.convention)
        commands.append(angles)
        gimbal_hold = angles
    except UnreliableTracking:
        if gimbal_hold is not None:
            commands.append(gimbal_hold)  # hold, never recenter on dropout

    return commands, TeleopState(clutches, state.configurations, retarget_states, gimbal_hold)


# --- config files -------------------------------------------------------------------


def _load_chain_ref(ref, base_dir) -> KinematicChain:
    """A chain is named either by packaged resource or by file path."""
    from . import resources

    if isinstance(ref, str):
        ref = {"resource": ref}
    if not isinstance(ref, dict) or len(ref) != 1:
        raise ValueError(f"chain reference must be a name, {{resource: ...}} or {{file: ...}}")
    if "resource" in ref:
        return resources.load_chain(ref["resource"])
    if "file" in ref:
        path = ref["file"]
        if base_dir is not None and not str(path).startswith("/"):
            path = base_dir / path
        with open(path, "r", encoding="utf-8") as fh:
            return parse_chain(fh.read())
    raise ValueError(f"unknown chain reference {ref!r}")


def config_from_dict(data: dict, base_dir=None) -> TeleopConfig:
    arms = {}
    for side, entry in (data.get("arms") or {}).items():
        chain = _load_chain_ref(entry["chain"], base_dir)
        params = IkParams(**entry.get("ik", {})) if "ik" in entry else IkParams(dt=1.0 / 90.0)
        arms[side] = ArmMapping(
            chain=chain,
            ee_frame=entry["frame"],
            chain_id=entry.get("id", ""),
            params=params,
            home=entry.get("home"),
        )
    hands = {}
    for side, entry in (data.get("hands") or {}).items():
        chain = _load_chain_ref(entry["chain"], base_dir)
        hands[side] = HandMapping(
            chain=chain,
            map=map_from_dict({"pairs": entry["pairs"]}),
            chain_id=entry.get("id", ""),
            params=RetargetParams(**entry.get("params", {})),
            home=entry.get("home"),
        )
    trackers = {
        sn: TrackerMapping(entry["side"], entry["frame"], entry.get("weight", 1.0))
        for sn, entry in (data.get("trackers") or {}).items()
    }
    base = BaseLimits(**(data.get("base") or {}))
    gimbal_entry = data.get("gimbal") or {}
    gimbal = GimbalLimits(
        yaw=tuple(gimbal_entry.get("yaw", GimbalLimits().yaw)),
        pitch=tuple(gimbal_entry.get("pitch", GimbalLimits().pitch)),
    )
    curve_points = data.get("gripper_curve")
    curve = GripperCurve(tuple(map(tuple, curve_points))) if curve_points else GripperCurve()
    return TeleopConfig(
        arms=arms,
        hands=hands,
        trackers=trackers,
        base=base,
        gimbal=gimbal,
        gripper_curve=curve,
        convention=data.get("convention", "xr_to_robot"),
    )


def load_config(path) -> TeleopConfig:
    """Read a mapping config file (YAML, documented in docs/formats.md)."""
    import pathlib

    import yaml

    path = pathlib.Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return config_from_dict(data, base_dir=path.parent)
