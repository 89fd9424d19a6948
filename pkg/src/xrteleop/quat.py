"""Unit-quaternion helpers in (x, y, z, w) component order.

The component order matches the seven-float wire pose (position xyz followed
by quaternion xyzw), so there is exactly one quaternion convention in the
whole codebase. All functions take and return plain float64 ndarrays and are
pure.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])


def normalize(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm.

    Pure-w quaternions are special-cased to exactly (0, 0, 0, ±1): division
    x/x is exact in IEEE-754, so identities produced by q ⊗ q⁻¹ stay exact
    bit-for-bit. That exactness is what makes clutch engagement jump-free.
    """
    q = np.asarray(q, dtype=float)
    if q[0] == 0.0 and q[1] == 0.0 and q[2] == 0.0:
        if q[3] == 0.0:
            raise ValueError("cannot normalize zero quaternion")
        return np.array([0.0, 0.0, 0.0, 1.0 if q[3] > 0 else -1.0])
    return q / np.linalg.norm(q)


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b (apply b's rotation first, then a's)."""
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + bw * ax + ay * bz - az * by,
            aw * by + bw * ay + az * bx - ax * bz,
            aw * bz + bw * az + ax * by - ay * bx,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q (q v q⁻¹ expanded, no trig)."""
    ux, uy, uz = float(q[0]), float(q[1]), float(q[2])
    w = float(q[3])
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    # t = 2 (u × v), result = v + w t + u × t; unrolled, np.cross is slow here
    tx = 2.0 * (uy * vz - uz * vy)
    ty = 2.0 * (uz * vx - ux * vz)
    tz = 2.0 * (ux * vy - uy * vx)
    return np.array(
        [
            vx + w * tx + uy * tz - uz * ty,
            vy + w * ty + uz * tx - ux * tz,
            vz + w * tz + ux * ty - uy * tx,
        ]
    )


def to_matrix(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
            [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
            [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
        ]
    )


def from_matrix(m: np.ndarray) -> np.ndarray:
    """Rotation matrix to quaternion (Shepperd's method, max-pivot branch)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        x = 0.25 * s
        w = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        y = 0.25 * s
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        z = 0.25 * s
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
    return normalize(np.array([x, y, z, w]))


def from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * float(angle)
    s = np.sin(half) / n
    return np.array([axis[0] * s, axis[1] * s, axis[2] * s, np.cos(half)])


def to_rotvec(q: np.ndarray) -> np.ndarray:
    """Rotation-vector (axis·angle) logarithm, shortest arc (angle ≤ π)."""
    q = np.asarray(q, dtype=float)
    if q[3] < 0.0:
        q = -q
    sin_half = np.linalg.norm(q[:3])
    # atan2 keeps full precision for both tiny and near-π rotations
    angle = 2.0 * np.arctan2(sin_half, q[3])
    if sin_half < 1e-12:
        return 2.0 * q[:3]  # small-angle limit: vec ≈ 2·(x,y,z)
    return q[:3] * (angle / sin_half)


def from_rotvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    if angle < 1e-12:
        half = v * 0.5
        return normalize(np.array([half[0], half[1], half[2], 1.0]))
    return from_axis_angle(v, angle)
