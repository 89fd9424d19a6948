/** Minimal vector / quaternion kit shared by FK, input handling, and rendering. */

export type Vec3 = [number, number, number];
/** [qx, qy, qz, qw], kept normalized by everything that produces one. */
export type Quat = [number, number, number, number];
/** [x, y, z, qx, qy, qz, qw] — the wire layout used for every pose. */
export type Pose7 = [number, number, number, number, number, number, number];

export const QUAT_IDENTITY: Quat = [0, 0, 0, 1];
export const POSE_IDENTITY: Pose7 = [0, 0, 0, 0, 0, 0, 1];

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [ax, ay, az, aw] = a;
  const [bx, by, bz, bw] = b;
  return [
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
    aw * bw - ax * bx - ay * by - az * bz,
  ];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (n === 0) {
    return [0, 0, 0, 1];
  }
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  if (n === 0) {
    return [0, 0, 0, 1];
  }
  const s = Math.sin(angle / 2) / n;
  return [axis[0] * s, axis[1] * s, axis[2] * s, Math.cos(angle / 2)];
}

export function rotateVec(q: Quat, v: Vec3): Vec3 {
  // q v q* via the two-cross-product expansion: v + 2w(u x v) + 2 u x (u x v)
  const [x, y, z, w] = q;
  const cx = y * v[2] - z * v[1];
  const cy = z * v[0] - x * v[2];
  const cz = x * v[1] - y * v[0];
  const ccx = y * cz - z * cy;
  const ccy = z * cx - x * cz;
  const ccz = x * cy - y * cx;
  return [
    v[0] + 2 * (w * cx + ccx),
    v[1] + 2 * (w * cy + ccy),
    v[2] + 2 * (w * cz + ccz),
  ];
}

/** parent ∘ child for pose7 transforms. */
export function composePose(parent: Pose7, child: Pose7): Pose7 {
  const pq: Quat = [parent[3], parent[4], parent[5], parent[6]];
  const moved = rotateVec(pq, [child[0], child[1], child[2]]);
  const q = quatNormalize(quatMultiply(pq, [child[3], child[4], child[5], child[6]]));
  return [
    parent[0] + moved[0],
    parent[1] + moved[1],
    parent[2] + moved[2],
    q[0],
    q[1],
    q[2],
    q[3],
  ];
}

export function addScaled(base: Vec3, direction: Vec3, scale: number): Vec3 {
  return [
    base[0] + direction[0] * scale,
    base[1] + direction[1] * scale,
    base[2] + direction[2] * scale,
  ];
}

export function distance(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}
