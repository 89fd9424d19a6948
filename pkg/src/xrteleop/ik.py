"""Differential inverse kinematics as a box-constrained velocity QP.

Each control step minimizes

    Σ_i w_i ‖J_i(q) q̇ + e_i‖²  +  damping ‖q̇‖²  −  k (∇m · q̇)
    subject to   l ≤ q̇ ≤ u

where e_i is the velocity-scaled residual toward task i's target, the box
comes from joint velocity limits and position limits shrunk over a horizon,
and ∇m is the manipulability gradient (k = manipulability_weight). The
quadratic is strictly convex (damping is floored at 1e-9), so the active-set
solve terminates at the unique optimum.

Clutching state for relative end-effector control lives here too: engage
anchors the device and end-effector poses, and the target then follows the
device displacement. Both poses are assumed co-framed; frame alignment
happens upstream.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import quat
from .chain import KinematicChain
from .errors import DimensionMismatch, InfeasibleBoundsWarning
from .kinematics import (
    ALL_ROWS,
    POSITION_ROWS,
    check_configuration,
    forward_kinematics,
    jacobian,
    manipulability_gradient,
)
from .pose import Pose

logger = logging.getLogger(__name__)

FRAME_POSE = "frame_pose"
FRAME_POSITION = "frame_position"

_DAMPING_FLOOR = 1e-9
_BOUND_SNAP = 1e-12  # distance at which a variable counts as "at its bound"


@dataclass(frozen=True)
class Task:
    """One weighted task: drive `frame` toward `target` on the selected rows."""

    frame: str
    target: Pose
    weight: float = 1.0
    rows: tuple[int, ...] = ALL_ROWS
    kind: str = FRAME_POSE

    def __post_init__(self):
        if self.kind not in (FRAME_POSE, FRAME_POSITION):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if not np.isfinite(self.weight) or self.weight <= 0:
            raise ValueError(f"task weight must be finite and > 0, got {self.weight}")
        rows = tuple(self.rows)
        if self.kind == FRAME_POSITION:
            rows = POSITION_ROWS
        if not rows or any(r not in ALL_ROWS for r in rows):
            raise ValueError(f"invalid row selection {rows}")
        object.__setattr__(self, "rows", rows)


@dataclass(frozen=True)
class ConstraintSet:
    """Joint-space box data: position limits, velocity limits, and the horizon
    (seconds) over which position limits shrink into velocity bounds."""

    joint_limits: tuple[np.ndarray, np.ndarray]
    velocity_limits: np.ndarray
    limit_horizon: float = 0.1

    def __post_init__(self):
        lo = np.asarray(self.joint_limits[0], dtype=float)
        hi = np.asarray(self.joint_limits[1], dtype=float)
        vel = np.asarray(self.velocity_limits, dtype=float)
        if lo.shape != hi.shape or lo.shape != vel.shape:
            raise DimensionMismatch("constraint vectors must share one length")
        if np.any(lo > hi):
            raise ValueError("joint limits out of order")
        if np.any(vel < 0):
            raise ValueError("velocity limits must be >= 0")
        if not self.limit_horizon > 0:
            raise ValueError("limit_horizon must be > 0")
        for arr in (lo, hi, vel):
            arr.setflags(write=False)
        object.__setattr__(self, "joint_limits", (lo, hi))
        object.__setattr__(self, "velocity_limits", vel)

    @staticmethod
    def from_chain(chain: KinematicChain, limit_horizon: float = 0.1) -> "ConstraintSet":
        return ConstraintSet(chain.position_limits(), chain.velocity_limits(), limit_horizon)

    @property
    def dof(self) -> int:
        return len(self.velocity_limits)


@dataclass(frozen=True)
class IkParams:
    damping: float = 1e-6
    manipulability_weight: float = 0.0
    dt: float = 1.0 / 90.0
    max_task_speed: float = 1.0
    # manipulability is measured at this frame (first task's frame when None)
    manipulability_frame: Optional[str] = None
    manipulability_rows: tuple[int, ...] = POSITION_ROWS

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        for name in ("damping", "manipulability_weight", "max_task_speed"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0")


@dataclass(frozen=True)
class IkSolution:
    qdot: np.ndarray
    objective: float
    active_constraints: frozenset[int]
    status: str  # optimal | clipped | infeasible_relaxed


@dataclass(frozen=True)
class DikQp:
    """The assembled QP in 0.5 q̇ᵀH q̇ + cᵀq̇ form, before bound relaxation."""

    H: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    blocks: tuple[tuple[np.ndarray, np.ndarray, float], ...]  # (J_i, e_i, w_i)
    manipulability_term: np.ndarray  # k·∇m, already weighted
    clipped: bool

    def objective_at(self, x: np.ndarray) -> float:
        """Full objective value (task cost + damping − manipulability reward)."""
        total = float(self.c @ x + 0.5 * x @ self.H @ x)
        # 0.5 xᵀHx + cᵀx omits the constant Σ w‖e‖²; add it back
        total += sum(w * float(e @ e) for _, e, w in self.blocks)
        return total


def pose_error(
    current: Pose,
    target: Pose,
    rows: Sequence[int] = ALL_ROWS,
    max_norm: Optional[float] = None,
) -> np.ndarray:
    """Displacement from `current` to `target` on the selected rows.

    Position rows are target − current; orientation rows are the world-frame
    rotation vector of target ∘ current⁻¹. When max_norm is given the whole
    selected vector is rescaled to that magnitude if it exceeds it.
    """
    full = np.empty(6)
    full[0:3] = target.position - current.position
    rel = quat.multiply(target.orientation, quat.conjugate(current.orientation))
    full[3:6] = quat.to_rotvec(rel)
    out = full[list(rows)]
    if max_norm is not None:
        n = float(np.linalg.norm(out))
        if n > max_norm:
            out *= max_norm / n
    return out


def assemble_dik_qp(
    chain: KinematicChain,
    q: Sequence[float],
    tasks: Sequence[Task],
    constraints: ConstraintSet,
    params: IkParams,
) -> DikQp:
    """Build the velocity QP exactly as solve_dik will solve it.

    Exposed separately so tests can hand the identical (H, c, bounds) to an
    independent minimizer.
    """
    q = check_configuration(chain, q)
    if constraints.dof != chain.dof:
        raise DimensionMismatch(
            f"constraints sized for dof {constraints.dof}, chain has {chain.dof}"
        )
    n = chain.dof
    damping = max(params.damping, _DAMPING_FLOOR)
    H = 2.0 * damping * np.eye(n)
    c = np.zeros(n)
    blocks = []
    clipped = False
    for task in tasks:
        current = forward_kinematics(chain, q, task.frame)
        disp = pose_error(current, task.target, task.rows)
        v = disp / params.dt
        speed = float(np.linalg.norm(v))
        if speed > params.max_task_speed:
            v *= params.max_task_speed / speed
            clipped = True
        e = -v  # J q̇ + e → 0 moves the frame toward the target
        J = jacobian(chain, q, task.frame).rows(task.rows)
        H += 2.0 * task.weight * J.T @ J
        c += 2.0 * task.weight * J.T @ e
        blocks.append((J, e, task.weight))

    manip = np.zeros(n)
    if params.manipulability_weight > 0.0 and n > 0:
        frame = params.manipulability_frame or (tasks[0].frame if tasks else None)
        if frame is None:
            logger.debug("manipulability weight set but no frame resolvable; skipping")
        else:
            grad = manipulability_gradient(chain, q, frame, params.manipulability_rows)
            manip = params.manipulability_weight * grad
            c -= manip

    lo_q, hi_q = constraints.joint_limits
    upper = np.minimum(constraints.velocity_limits, (hi_q - q) / constraints.limit_horizon)
    lower = np.maximum(-constraints.velocity_limits, (lo_q - q) / constraints.limit_horizon)
    return DikQp(H, c, lower, upper, tuple(blocks), manip, clipped)


def solve_box_qp(
    H: np.ndarray,
    c: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iter: Optional[int] = None,
) -> tuple[np.ndarray, frozenset[int], int]:
    """Minimize 0.5 xᵀHx + cᵀx over the box [lower, upper], H positive definite.

    Primal active-set iteration: solve the free subsystem, take the longest
    feasible step (ratio test), and release bound variables whose multiplier
    has the wrong sign. Returns (x, indices at a bound, iterations).
    """
    n = len(c)
    if n == 0:
        return np.zeros(0), frozenset(), 0
    if np.any(lower > upper):
        raise ValueError("empty box")
    if max_iter is None:
        max_iter = 100 * (n + 1)

    x = np.clip(np.zeros(n), lower, upper)
    # state: 0 free, -1 at lower, +1 at upper, 2 pinned (lower == upper)
    state = np.zeros(n, dtype=int)
    pinned = upper - lower < _BOUND_SNAP
    state[pinned] = 2
    state[~pinned & (x <= lower + _BOUND_SNAP)] = -1
    state[~pinned & (x >= upper - _BOUND_SNAP)] = +1
    # a zero start may sit on a bound; that is fine, it begins active

    for iteration in range(1, max_iter + 1):
        free = np.flatnonzero(state == 0)
        # exact optimum of the free subspace with the active variables held:
        # H_ff x_f = -(c_f + H_fa x_a)
        if free.size:
            rest = np.flatnonzero(state != 0)
            rhs = -c[free]
            if rest.size:
                rhs -= H[np.ix_(free, rest)] @ x[rest]
            target = np.linalg.solve(H[np.ix_(free, free)], rhs)
            d = target - x[free]
        else:
            target = d = np.zeros(0)

        # ratio test: longest feasible step toward the subspace optimum
        alpha = 1.0
        blocker = -1
        blocker_side = 0
        for k, i in enumerate(free):
            if d[k] > 0:
                room = (upper[i] - x[i]) / d[k]
                side = 1
            elif d[k] < 0:
                room = (lower[i] - x[i]) / d[k]
                side = -1
            else:
                continue
            if room < alpha:
                alpha = room
                blocker = i
                blocker_side = side

        if blocker >= 0:
            x[free] += alpha * d
            x[blocker] = upper[blocker] if blocker_side == 1 else lower[blocker]
            state[blocker] = blocker_side
            np.clip(x, lower, upper, out=x)
            continue

        # full step lands on the subspace optimum exactly; no step tolerance needed
        if free.size:
            x[free] = target
        g = H @ x + c
        threshold = 1e-10 * max(1.0, float(np.max(np.abs(g), initial=0.0)))
        release = -1
        worst = threshold
        for i in np.flatnonzero((state == 1) | (state == -1)):
            # a bound is wrongly active when the objective improves by leaving it
            violation = g[i] if state[i] == 1 else -g[i]
            if violation > worst:
                worst = violation
                release = i
        if release < 0:
            at_bound = frozenset(
                int(i)
                for i in range(n)
                if x[i] <= lower[i] + _BOUND_SNAP or x[i] >= upper[i] - _BOUND_SNAP
            )
            return x, at_bound, iteration
        state[release] = 0

    raise RuntimeError(f"box QP failed to converge in {max_iter} iterations")


def solve_dik(
    chain: KinematicChain,
    q: Sequence[float],
    tasks: Sequence[Task],
    constraints: ConstraintSet,
    params: IkParams,
) -> IkSolution:
    """Solve one differential-IK step; see the module docstring for the QP."""
    qp = assemble_dik_qp(chain, q, tasks, constraints, params)
    lower, upper = qp.lower.copy(), qp.upper.copy()
    bad = np.flatnonzero(lower > upper)
    if bad.size:
        warnings.warn(
            f"velocity box empty on joints {bad.tolist()}; relaxing to zero rate",
            InfeasibleBoundsWarning,
        )
        lower[bad] = 0.0
        upper[bad] = 0.0
    x, at_bound, _ = solve_box_qp(qp.H, qp.c, lower, upper)
    if bad.size:
        status = "infeasible_relaxed"
    elif qp.clipped:
        status = "clipped"
    else:
        status = "optimal"
    return IkSolution(
        qdot=x,
        objective=qp.objective_at(x),
        active_constraints=at_bound,
        status=status,
    )


def integrate(
    chain: KinematicChain, q: Sequence[float], qdot: Sequence[float], dt: float
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Euler step q + q̇·dt clamped into the joint limits.

    Returns the new configuration and the indices that had to be clamped.
    """
    q = check_configuration(chain, q)
    qdot = np.asarray(qdot, dtype=float)
    if qdot.shape != (chain.dof,):
        raise DimensionMismatch(f"qdot length {qdot.shape} does not match dof {chain.dof}")
    if not np.all(np.isfinite(qdot)):
        raise DimensionMismatch("qdot contains non-finite values")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    raw = q + qdot * dt
    lo, hi = chain.position_limits()
    out = np.clip(raw, lo, hi)
    clamped = tuple(int(i) for i in np.flatnonzero(out != raw))
    return out, clamped


# --- clutching -----------------------------------------------------------------


@dataclass(frozen=True)
class ClutchState:
    """Anchors for relative end-effector control; set iff engaged."""

    engaged: bool = False
    anchor_device: Optional[Pose] = None
    anchor_ee: Optional[Pose] = None

    def __post_init__(self):
        have_anchors = self.anchor_device is not None and self.anchor_ee is not None
        if self.engaged != have_anchors:
            raise ValueError("anchors must be set exactly when engaged")


DISENGAGED = ClutchState()


def clutch_engage(device: Pose, ee: Pose) -> ClutchState:
    return ClutchState(True, device, ee)


def clutch_release(state: ClutchState) -> ClutchState:
    return DISENGAGED


def clutched_target(state: ClutchState, device_now: Pose) -> Optional[Pose]:
    """Anchor-relative target; None while disengaged.

    With device_now equal to the anchor this returns the anchored end-effector
    pose bit-for-bit (the relative quaternion normalizes to the exact
    identity), which is what makes clutch engagement jump-free.
    """
    if not state.engaged:
        return None
    rel = quat.multiply(device_now.orientation, quat.conjugate(state.anchor_device.orientation))
    rel = quat.normalize(rel)
    return Pose(
        state.anchor_ee.position + (device_now.position - state.anchor_device.position),
        quat.multiply(rel, state.anchor_ee.orientation),
    )
