/** Kinematic chain descriptions as served by /chains.json, plus client-side FK.
 *
 * The viewer re-implements forward kinematics only — streamed joint values
 * become link poses for drawing. Anything inverse stays on the service side.
 */

import {
  composePose,
  Pose7,
  POSE_IDENTITY,
  quatFromAxisAngle,
  Vec3,
} from "./geometry.js";

export type JointKind = "revolute" | "prismatic" | "fixed";

export interface ChainJoint {
  name: string;
  kind: JointKind;
  parent_link: string;
  child_link: string;
  origin: Pose7;
  axis: Vec3;
  /** null bound = unlimited */
  limits: [number | null, number | null];
  velocity_limit: number | null;
}

export interface ChainDescription {
  name: string;
  root_link: string;
  joints: ChainJoint[];
}

export interface ChainsPayload {
  ws_url: string;
  rate_hz: number;
  chains: Record<string, ChainDescription>;
}

export function actuatedCount(chain: ChainDescription): number {
  let n = 0;
  for (const joint of chain.joints) {
    if (joint.kind !== "fixed") {
      n += 1;
    }
  }
  return n;
}

function jointMotion(joint: ChainJoint, value: number): Pose7 {
  if (joint.kind === "revolute") {
    const q = quatFromAxisAngle(joint.axis, value);
    return [0, 0, 0, q[0], q[1], q[2], q[3]];
  }
  if (joint.kind === "prismatic") {
    return [
      joint.axis[0] * value,
      joint.axis[1] * value,
      joint.axis[2] * value,
      0,
      0,
      0,
      1,
    ];
  }
  return POSE_IDENTITY;
}

/** Pose of every link in the chain base frame for joint values q.
 *
 * q holds one value per non-fixed joint, in declaration order — the same
 * convention the state stream uses for each chain's joint array.
 */
export function forwardKinematics(
  chain: ChainDescription,
  q: readonly number[],
): Record<string, Pose7> {
  const poses: Record<string, Pose7> = { [chain.root_link]: POSE_IDENTITY };
  let used = 0;
  for (const joint of chain.joints) {
    const parent = poses[joint.parent_link];
    if (parent === undefined) {
      throw new Error(`joint ${joint.name}: unknown parent link ${joint.parent_link}`);
    }
    let value = 0;
    if (joint.kind !== "fixed") {
      if (used >= q.length) {
        throw new Error(
          `chain ${chain.name}: needs ${actuatedCount(chain)} joint values, got ${q.length}`,
        );
      }
      value = q[used];
      used += 1;
    }
    poses[joint.child_link] = composePose(
      composePose(parent, joint.origin),
      jointMotion(joint, value),
    );
  }
  if (used !== q.length) {
    throw new Error(
      `chain ${chain.name}: needs ${used} joint values, got ${q.length}`,
    );
  }
  return poses;
}

/** Link-to-link segments in drawing order: one per joint, parent → child. */
export function linkSegments(
  chain: ChainDescription,
  poses: Record<string, Pose7>,
): Array<[Vec3, Vec3]> {
  const segments: Array<[Vec3, Vec3]> = [];
  for (const joint of chain.joints) {
    const a = poses[joint.parent_link];
    const b = poses[joint.child_link];
    if (a && b) {
      segments.push([
        [a[0], a[1], a[2]],
        [b[0], b[1], b[2]],
      ]);
    }
  }
  return segments;
}
