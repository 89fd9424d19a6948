"""Forward kinematics, geometric Jacobians, and manipulability.

Conventions, fixed once for the whole toolkit:

* configurations are dof-length float vectors ordered as the actuated joints
  appear in the chain;
* Jacobians are geometric, expressed in the world frame, rows ordered
  [vx, vy, vz, ωx, ωy, ωz] per unit joint rate;
* manipulability is sqrt(det(J_sel · J_selᵀ)) over a row selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import quat
from .chain import PRISMATIC, REVOLUTE, KinematicChain
from .errors import DimensionMismatch
from .pose import Pose

POSITION_ROWS = (0, 1, 2)
ORIENTATION_ROWS = (3, 4, 5)
ALL_ROWS = (0, 1, 2, 3, 4, 5)
POSITION_XY_ROWS = (0, 1)


@dataclass(frozen=True)
class Jacobian:
    """6×dof geometric Jacobian of `frame`, world coordinates."""

    matrix: np.ndarray
    frame: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != 6:
            raise ValueError(f"Jacobian must be 6×dof, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def rows(self, selection: Sequence[int]) -> np.ndarray:
        return self.matrix[list(selection), :]


def check_configuration(chain: KinematicChain, q: Sequence[float]) -> np.ndarray:
    arr = np.asarray(q, dtype=float)
    if arr.shape != (chain.dof,):
        raise DimensionMismatch(
            f"configuration length {arr.shape} does not match dof {chain.dof}"
        )
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("configuration contains non-finite values")
    return arr


def _walk(chain: KinematicChain, q: np.ndarray, frame: str, columns: Optional[list] = None):
    """Accumulate the world transform along the path to `frame`.

    Runs on raw (position, quaternion) pairs instead of Pose objects; this is
    the hot loop under the IK and retargeting solvers. When `columns` is given
    it collects (q_index, kind, world_axis, joint_world_position) per actuated
    joint on the way down.
    """
    p = np.zeros(3)
    rot = quat.IDENTITY
    for ji in chain.joint_path(frame):
        joint = chain.joints[ji]
        origin = joint.origin
        p = p + quat.rotate(rot, origin.position)
        rot = quat.multiply(rot, origin.orientation)
        if joint.actuated:
            value = q[chain.q_index(ji)]
            if columns is not None:
                world_axis = quat.rotate(rot, joint.axis)
                columns.append((chain.q_index(ji), joint.kind, world_axis, p))
            if joint.kind == REVOLUTE:
                rot = quat.multiply(rot, quat.from_axis_angle(joint.axis, value))
            else:
                p = p + quat.rotate(rot, joint.axis * value)
    return p, rot


def forward_kinematics(chain: KinematicChain, q: Sequence[float], frame: str) -> Pose:
    """World pose of `frame` at configuration q. Pure and deterministic."""
    q = check_configuration(chain, q)
    p, rot = _walk(chain, q, frame)
    return Pose(p, rot)  # Pose handles the (rare) renormalization on drift


def jacobian(chain: KinematicChain, q: Sequence[float], frame: str) -> Jacobian:
    """Geometric Jacobian of `frame` in world coordinates, rows [v; ω]."""
    q = check_configuration(chain, q)

    # one pass down the path collecting each joint's world axis and position
    J = np.zeros((6, chain.dof))
    columns = []  # (q_index, kind, world_axis, joint_world_position)
    p_frame, _ = _walk(chain, q, frame, columns)

    for q_idx, kind, axis_w, p_joint in columns:
        if kind == REVOLUTE:
            rx, ry, rz = p_frame - p_joint
            ax, ay, az = axis_w
            J[0:3, q_idx] = (ay * rz - az * ry, az * rx - ax * rz, ax * ry - ay * rx)
            J[3:6, q_idx] = axis_w
        elif kind == PRISMATIC:
            J[0:3, q_idx] = axis_w
    return Jacobian(J, frame)


def manipulability(jac: Jacobian | np.ndarray, rows: Optional[Sequence[int]] = None) -> float:
    """sqrt(det(J_sel J_selᵀ)) over the selected rows; 0 when rank-deficient.

    Total on finite input: a negative determinant from round-off clamps to 0.
    """
    m = jac.matrix if isinstance(jac, Jacobian) else np.asarray(jac, dtype=float)
    sel = m if rows is None else m[list(rows), :]
    if sel.shape[0] > sel.shape[1]:
        return 0.0
    if sel.shape[0] == 0 or sel.size == 0:
        return 0.0
    gram = sel @ sel.T
    det = float(np.linalg.det(gram))
    return float(np.sqrt(det)) if det > 0.0 else 0.0


def manipulability_gradient(
    chain: KinematicChain,
    q: Sequence[float],
    frame: str,
    rows: Optional[Sequence[int]] = None,
    step: float = 1e-6,
) -> np.ndarray:
    """∂m/∂q by central finite differences with step `step` (default 1e-6)."""
    q = check_configuration(chain, q)
    grad = np.zeros(chain.dof)
    for j in range(chain.dof):
        qp = q.copy()
        qm = q.copy()
        qp[j] += step
        qm[j] -= step
        mp = manipulability(jacobian(chain, qp, frame), rows)
        mm = manipulability(jacobian(chain, qm, frame), rows)
        grad[j] = (mp - mm) / (2.0 * step)
    return grad
