/** Canned 26-joint hand frames for the virtual device.
 *
 * Joint order follows the usual XR layout: 0 palm, 1 wrist, 2-5 thumb,
 * 6-10 index, 11-15 middle, 16-20 ring, 21-25 little — tips at 5, 10, 15,
 * 20, 25. Positions are meters in the device frame of a right hand held
 * palm-down: fingers extend along -z, palm normal -y, thumb on the -x side.
 * The service-side retargeting reads keypoint positions, so orientations
 * stay at the device orientation.
 */

import {
  addScaled,
  Pose7,
  Quat,
  quatFromAxisAngle,
  quatMultiply,
  quatNormalize,
  rotateVec,
  Vec3,
} from "./geometry.js";
import { HandJoint } from "./packet.js";

export const HAND_JOINT_COUNT = 26;
export const PALM = 0;
export const WRIST = 1;
export const THUMB_TIP = 5;
export const INDEX_TIP = 10;

export type HandPresetName = "open" | "pinch" | "point";

interface FingerShape {
  root: Vec3;
  segments: number[];
  /** splay about +y; positive leans toward -x (the thumb side) */
  spread: number;
  /** curl axis before splay is applied */
  bendAxis: Vec3;
}

const THUMB: FingerShape = {
  root: [-0.025, -0.012, -0.015],
  segments: [0.045, 0.035, 0.03],
  spread: 1.0,
  bendAxis: [-0.7, -0.8, 0.0],
};

const FINGERS: FingerShape[] = [
  { root: [-0.02, -0.004, -0.025], segments: [0.055, 0.04, 0.026, 0.022], spread: 0.05, bendAxis: [-1, 0, 0] },
  { root: [-0.005, -0.002, -0.027], segments: [0.058, 0.043, 0.029, 0.023], spread: 0.0, bendAxis: [-1, 0, 0] },
  { root: [0.01, -0.003, -0.026], segments: [0.054, 0.04, 0.027, 0.022], spread: -0.06, bendAxis: [-1, 0, 0] },
  { root: [0.024, -0.006, -0.023], segments: [0.047, 0.033, 0.023, 0.02], spread: -0.14, bendAxis: [-1, 0, 0] },
];

interface PresetCurls {
  thumb: number[];
  index: number[];
  rest: number[];
}

const CURLS: Record<HandPresetName, PresetCurls> = {
  open: {
    thumb: [0.05, 0.1, 0.08],
    index: [0.05, 0.12, 0.1, 0.06],
    rest: [0.05, 0.12, 0.1, 0.06],
  },
  pinch: {
    thumb: [1.0, 0.2, 0.1],
    index: [0.1, 0.65, 0.6, 0.45],
    rest: [0.15, 0.8, 0.75, 0.6],
  },
  point: {
    thumb: [0.35, 0.7, 0.6],
    index: [0.02, 0.06, 0.04, 0.03],
    rest: [0.25, 1.15, 1.05, 0.85],
  },
};

function fingerPositions(shape: FingerShape, curls: number[]): Vec3[] {
  const splay = quatFromAxisAngle([0, 1, 0], shape.spread);
  const straight = rotateVec(splay, [0, 0, -1]);
  const axis = rotateVec(splay, shape.bendAxis);
  const points: Vec3[] = [shape.root];
  let position = shape.root;
  let bent = 0;
  for (let i = 0; i < shape.segments.length; i++) {
    bent += curls[i] ?? 0;
    const direction = rotateVec(quatFromAxisAngle(axis, bent), straight);
    position = addScaled(position, direction, shape.segments[i]);
    points.push(position);
  }
  return points;
}

/** The 26 joints of a preset, in the device-local hand frame. */
export function handPresetJoints(name: HandPresetName): HandJoint[] {
  const curls = CURLS[name];
  const positions: Vec3[] = [
    [0.0, -0.008, -0.03], // palm
    [0.0, 0.0, 0.0], // wrist
    ...fingerPositions(THUMB, curls.thumb),
    ...fingerPositions(FINGERS[0], curls.index),
    ...fingerPositions(FINGERS[1], curls.rest),
    ...fingerPositions(FINGERS[2], curls.rest),
    ...fingerPositions(FINGERS[3], curls.rest),
  ];
  return positions.map((p) => ({
    pose: [p[0], p[1], p[2], 0, 0, 0, 1],
    status: 1,
    radius: 0.01,
  }));
}

/** Move a local hand frame to the device pose (rotate, then translate). */
export function placeHand(joints: HandJoint[], devicePose: Pose7): HandJoint[] {
  const q: Quat = [devicePose[3], devicePose[4], devicePose[5], devicePose[6]];
  return joints.map((joint) => {
    const p = rotateVec(q, [joint.pose[0], joint.pose[1], joint.pose[2]]);
    const rotated = quatNormalize(
      quatMultiply(q, [joint.pose[3], joint.pose[4], joint.pose[5], joint.pose[6]]),
    );
    return {
      pose: [
        devicePose[0] + p[0],
        devicePose[1] + p[1],
        devicePose[2] + p[2],
        rotated[0],
        rotated[1],
        rotated[2],
        rotated[3],
      ],
      status: joint.status,
      radius: joint.radius,
    };
  });
}
