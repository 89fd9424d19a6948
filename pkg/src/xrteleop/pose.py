"""Rigid-body pose: 3D position plus unit quaternion (x, y, z, w).

This is the universal 6-DOF element of the toolkit — the same seven numbers
that travel on the wire. Instances are immutable: the backing arrays are
marked read-only after construction, so poses can be shared freely between
threads.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from . import quat

_NORM_SKIP_TOL = 1e-9  # keep bits when already unit to this tolerance


class Pose:
    __slots__ = ("position", "orientation")

    def __init__(
        self,
        position: Iterable[float] = (0.0, 0.0, 0.0),
        orientation: Iterable[float] = (0.0, 0.0, 0.0, 1.0),
    ):
        p = np.array(position, dtype=float).reshape(3)
        q = np.array(orientation, dtype=float).reshape(4)
        if not np.all(np.isfinite(p)) or not np.all(np.isfinite(q)):
            raise ValueError("pose components must be finite")
        n = np.linalg.norm(q)
        if n < 1e-6:
            raise ValueError(f"degenerate quaternion (norm {n:.3g})")
        if abs(n - 1.0) > _NORM_SKIP_TOL:
            q = quat.normalize(q)
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    def __setattr__(self, name, value):  # pragma: no cover - defensive
        raise AttributeError("Pose is immutable")

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    def compose(self, other: "Pose") -> "Pose":
        """This pose applied first, then `other` in this pose's frame: T_self · T_other."""
        return Pose(
            self.position + quat.rotate(self.orientation, other.position),
            quat.multiply(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        q_inv = quat.conjugate(self.orientation)
        return Pose(-quat.rotate(q_inv, self.position), q_inv)

    def transform_point(self, point: Iterable[float]) -> np.ndarray:
        return self.position + quat.rotate(self.orientation, np.asarray(point, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        return quat.to_matrix(self.orientation)

    def to_pose7(self) -> list[float]:
        """Wire form: [x, y, z, qx, qy, qz, qw]."""
        return [float(v) for v in self.position] + [float(v) for v in self.orientation]

    @staticmethod
    def from_pose7(values: Iterable[float]) -> "Pose":
        vals = list(values)
        if len(vals) != 7:
            raise ValueError(f"pose7 needs 7 values, got {len(vals)}")
        return Pose(vals[:3], vals[3:])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.position, other.position) and np.array_equal(
            self.orientation, other.orientation
        )

    __hash__ = None  # mutable-array-backed; equality is by value

    def approx_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        """True when positions agree within tol and rotations within tol radians."""
        if np.linalg.norm(self.position - other.position) > tol:
            return False
        dq = quat.multiply(quat.conjugate(self.orientation), other.orientation)
        return float(np.linalg.norm(quat.to_rotvec(dq))) <= tol

    def __repr__(self) -> str:
        p = ", ".join(f"{v:.6g}" for v in self.position)
        q = ", ".join(f"{v:.6g}" for v in self.orientation)
        return f"Pose(position=({p}), orientation=({q}))"
