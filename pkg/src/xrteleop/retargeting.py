"""Hand retargeting: 26-keypoint hand frames onto robot-hand joints.

Per update the solver minimizes

    Σ_i ‖α v_t^i − f_i(q_t)‖²  +  β ‖q_t − q_{t−1}‖²
    subject to   q_l ≤ q_t ≤ q_u

where v_t^i is a wrist-relative human keypoint vector (scaled by the tracked
hand scale and α), and f_i(q) is the matching robot fingertip vector from
forward kinematics. Wrist-relative means the hand's global pose cancels out
of v_t^i entirely; moving the whole hand through space changes nothing here.

The optimizer is projected Gauss-Newton with a Levenberg damping fallback
(large damping degenerates to projected gradient), warm-started at q_{t−1}.
Everything is deterministic: same inputs, same iteration order, same output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import quat
from .chain import KinematicChain
from .errors import DimensionMismatch, InactiveFrame
from .ik import solve_box_qp
from .kinematics import POSITION_ROWS, forward_kinematics, jacobian
from .pose import Pose

logger = logging.getLogger(__name__)

# OpenXR 26-joint hand layout: palm, wrist, 4 thumb joints, then 5 joints per
# finger (metacarpal, proximal, intermediate, distal, tip)
HAND_JOINT_COUNT = 26
PALM = 0
WRIST = 1
THUMB_METACARPAL, THUMB_PROXIMAL, THUMB_DISTAL, THUMB_TIP = 2, 3, 4, 5
INDEX_METACARPAL, INDEX_PROXIMAL, INDEX_INTERMEDIATE, INDEX_DISTAL, INDEX_TIP = 6, 7, 8, 9, 10
MIDDLE_METACARPAL, MIDDLE_PROXIMAL, MIDDLE_INTERMEDIATE, MIDDLE_DISTAL, MIDDLE_TIP = (
    11,
    12,
    13,
    14,
    15,
)
RING_METACARPAL, RING_PROXIMAL, RING_INTERMEDIATE, RING_DISTAL, RING_TIP = 16, 17, 18, 19, 20
LITTLE_METACARPAL, LITTLE_PROXIMAL, LITTLE_INTERMEDIATE, LITTLE_DISTAL, LITTLE_TIP = (
    21,
    22,
    23,
    24,
    25,
)

_LEVENBERG_START = 1e-6
_LEVENBERG_GROW = 10.0
_LEVENBERG_SHRINK = 3.0
_LEVENBERG_CAP = 1e12


@dataclass(frozen=True)
class HandJoint:
    pose: Pose
    status: int = 1
    radius: float = 0.01


@dataclass(frozen=True)
class HandFrame:
    """One tracked hand sample: activity flag, size scale, 26 joints."""

    is_active: bool
    scale: float = 1.0
    joints: tuple[HandJoint, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ValueError(f"hand scale must be > 0, got {self.scale}")
        joints = tuple(self.joints)
        if self.is_active and len(joints) != HAND_JOINT_COUNT:
            raise ValueError(f"active hand needs {HAND_JOINT_COUNT} joints, got {len(joints)}")
        if not self.is_active and len(joints) not in (0, HAND_JOINT_COUNT):
            raise ValueError("inactive hand carries either no joints or all of them")
        object.__setattr__(self, "joints", joints)


@dataclass(frozen=True)
class RetargetPair:
    """One keypoint-to-frame correspondence.

    The human vector runs reference_keypoint → human_keypoint; the robot
    vector runs robot_reference_frame → robot_frame (chain root when None).
    """

    human_keypoint: int
    robot_frame: str
    reference_keypoint: int = WRIST
    robot_reference_frame: Optional[str] = None

    def __post_init__(self):
        for idx in (self.human_keypoint, self.reference_keypoint):
            if not 0 <= idx < HAND_JOINT_COUNT:
                raise ValueError(f"keypoint index {idx} outside 0..{HAND_JOINT_COUNT - 1}")


@dataclass(frozen=True)
class RetargetMap:
    pairs: tuple[RetargetPair, ...]

    def __post_init__(self):
        pairs = tuple(self.pairs)
        if not pairs:
            raise ValueError("retarget map needs at least one pair")
        object.__setattr__(self, "pairs", pairs)

    def check_frames(self, chain: KinematicChain) -> None:
        """Raise UnknownFrame unless every referenced robot frame resolves."""
        for pair in self.pairs:
            chain.joint_path(pair.robot_frame)
            if pair.robot_reference_frame is not None:
                chain.joint_path(pair.robot_reference_frame)


def map_to_dict(map_: RetargetMap) -> dict:
    """JSON-ready form, the unit of hand-model configuration."""
    return {
        "pairs": [
            {
                "human_keypoint": p.human_keypoint,
                "robot_frame": p.robot_frame,
                "reference_keypoint": p.reference_keypoint,
                "robot_reference_frame": p.robot_reference_frame,
            }
            for p in map_.pairs
        ]
    }


def map_from_dict(data: dict) -> RetargetMap:
    return RetargetMap(
        tuple(
            RetargetPair(
                human_keypoint=int(p["human_keypoint"]),
                robot_frame=p["robot_frame"],
                reference_keypoint=int(p.get("reference_keypoint", WRIST)),
                robot_reference_frame=p.get("robot_reference_frame"),
            )
            for p in data["pairs"]
        )
    )


@dataclass(frozen=True)
class RetargetParams:
    alpha: float = 1.0
    beta: float = 0.01
    max_iters: int = 50
    tol: float = 1e-8

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class RetargetState:
    """Previous solution and joint box; q_prev must already sit in the box."""

    q_prev: np.ndarray
    bounds: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        q = np.asarray(self.q_prev, dtype=float)
        lo = np.asarray(self.bounds[0], dtype=float)
        hi = np.asarray(self.bounds[1], dtype=float)
        if q.shape != lo.shape or q.shape != hi.shape:
            raise DimensionMismatch("state vectors must share one length")
        if np.any(lo > hi):
            raise ValueError("bounds out of order")
        if np.any(q < lo) or np.any(q > hi):
            raise ValueError("q_prev outside bounds")
        for arr in (q, lo, hi):
            arr.setflags(write=False)
        object.__setattr__(self, "q_prev", q)
        object.__setattr__(self, "bounds", (lo, hi))

    @staticmethod
    def from_chain(chain: KinematicChain) -> "RetargetState":
        return RetargetState(chain.zero_configuration(), chain.position_limits())

    def advanced(self, q: np.ndarray) -> "RetargetState":
        return RetargetState(q, self.bounds)


def keypoint_vectors(frame: HandFrame, map_: RetargetMap) -> np.ndarray:
    """(N, 3) wrist-relative target vectors, scaled by the hand's size scale.

    Each vector is the keypoint position minus its reference keypoint's
    position, rotated into the reference keypoint's frame.
    """
    if not frame.is_active:
        raise InactiveFrame("keypoint vectors requested from an inactive hand frame")
    out = np.empty((len(map_.pairs), 3))
    for row, pair in enumerate(map_.pairs):
        ref = frame.joints[pair.reference_keypoint].pose
        tip = frame.joints[pair.human_keypoint].pose
        delta = tip.position - ref.position
        out[row] = frame.scale * quat.rotate(quat.conjugate(ref.orientation), delta)
    return out


def _robot_positions(chain: KinematicChain, q: np.ndarray, map_: RetargetMap) -> np.ndarray:
    """f(q) stacked (N, 3): per-pair robot frame minus its reference frame."""
    f = np.empty((len(map_.pairs), 3))
    for row, pair in enumerate(map_.pairs):
        f[row] = forward_kinematics(chain, q, pair.robot_frame).position
        if pair.robot_reference_frame is not None:
            f[row] -= forward_kinematics(chain, q, pair.robot_reference_frame).position
    return f


def _robot_vectors(
    chain: KinematicChain, q: np.ndarray, map_: RetargetMap
) -> tuple[np.ndarray, np.ndarray]:
    """f(q) stacked (N,3) and its Jacobian (3N, dof)."""
    f = np.empty((len(map_.pairs), 3))
    Jf = np.zeros((3 * len(map_.pairs), chain.dof))
    for row, pair in enumerate(map_.pairs):
        tip = forward_kinematics(chain, q, pair.robot_frame)
        J = jacobian(chain, q, pair.robot_frame).rows(POSITION_ROWS)
        if pair.robot_reference_frame is not None:
            ref = forward_kinematics(chain, q, pair.robot_reference_frame)
            J = J - jacobian(chain, q, pair.robot_reference_frame).rows(POSITION_ROWS)
            f[row] = tip.position - ref.position
        else:
            f[row] = tip.position
        Jf[3 * row : 3 * row + 3] = J
    return f, Jf


def solve_retarget(
    chain: KinematicChain,
    frame: HandFrame,
    map_: RetargetMap,
    state: RetargetState,
    params: RetargetParams,
) -> np.ndarray:
    """One retargeting solve; returns q_t inside the bounds (exact projection)."""
    if not frame.is_active:
        raise InactiveFrame("cannot retarget an inactive hand frame")
    lo, hi = state.bounds
    if len(state.q_prev) != chain.dof:
        raise DimensionMismatch(
            f"state sized for dof {len(state.q_prev)}, chain has {chain.dof}"
        )
    targets = (params.alpha * keypoint_vectors(frame, map_)).ravel()
    q_prev = state.q_prev
    q = np.clip(q_prev, lo, hi)
    beta = params.beta
    eye = np.eye(chain.dof)

    def cost(qv: np.ndarray) -> float:
        r = targets - _robot_positions(chain, qv, map_).ravel()
        return float(r @ r + beta * np.sum((qv - q_prev) ** 2))

    current_cost = cost(q)
    mu = _LEVENBERG_START
    for iteration in range(params.max_iters):
        f, Jf = _robot_vectors(chain, q, map_)
        r = targets - f.ravel()
        grad = -2.0 * Jf.T @ r + 2.0 * beta * (q - q_prev)
        projected = grad.copy()
        projected[(q <= lo) & (grad > 0)] = 0.0
        projected[(q >= hi) & (grad < 0)] = 0.0
        if np.max(np.abs(projected), initial=0.0) < params.tol:
            break

        # each linearization is itself a box QP over the step d = q_new − q:
        # min ‖Jf d − r‖² + β‖q − q_prev + d‖² + mu‖d‖²  s.t. lo − q ≤ d ≤ hi − q
        accepted = False
        while mu < _LEVENBERG_CAP:
            H = 2.0 * (Jf.T @ Jf + (beta + mu) * eye)
            g = -2.0 * (Jf.T @ r - beta * (q - q_prev))
            step, _, _ = solve_box_qp(H, g, lo - q, hi - q)
            candidate = np.clip(q + step, lo, hi)
            candidate_cost = cost(candidate)
            if candidate_cost < current_cost - 1e-15:
                q = candidate
                current_cost = candidate_cost
                mu = max(mu / _LEVENBERG_SHRINK, 1e-9)
                accepted = True
                break
            mu *= _LEVENBERG_GROW
        if not accepted:
            break  # no descent at any damping; stationary to working precision

    else:
        logger.debug("retarget solve hit max_iters=%d", params.max_iters)
    return np.clip(q, lo, hi)


class RetargetStream:
    """Stateful per-frame stepper: solve on active frames, hold on loss.

    Single-consumer by design; one tracked hand feeds one stream instance.
    """

    def __init__(
        self,
        chain: KinematicChain,
        map_: RetargetMap,
        params: RetargetParams,
        state: Optional[RetargetState] = None,
    ):
        map_.check_frames(chain)
        self.chain = chain
        self.map = map_
        self.params = params
        self.state = state if state is not None else RetargetState.from_chain(chain)

    def step(self, frame: HandFrame) -> np.ndarray:
        if not frame.is_active:
            return self.state.q_prev.copy()  # freeze on tracking loss
        q = solve_retarget(self.chain, frame, self.map, self.state, self.params)
        self.state = self.state.advanced(q)
        return q.copy()


def step_stream(
    frames: Iterable[HandFrame],
    chain: KinematicChain,
    map_: RetargetMap,
    params: RetargetParams,
    state: Optional[RetargetState] = None,
) -> list[np.ndarray]:
    """Run a whole frame sequence through a RetargetStream."""
    stream = RetargetStream(chain, map_, params, state)
    return [stream.step(frame) for frame in frames]
