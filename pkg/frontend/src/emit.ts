/** Packet assembly from the device snapshot, plus the send-rate gate.
 *
 * The frame loop calls RateGate.due(now) every animation frame and builds a
 * packet only when it fires, so the effective send rate is the display
 * refresh capped at MAX_SEND_HZ. Sequence numbers are handed out by the
 * caller and must only ever grow.
 */

import { Pose7, quatFromAxisAngle, quatMultiply, quatNormalize } from "./geometry.js";
import { StickState, VirtualDevice } from "./device.js";
import { handPresetJoints, placeHand } from "./presets.js";
import { TrackingPacket } from "./packet.js";

export const MAX_SEND_HZ = 90;

/** Where the operator's head sits; only its orientation is interactive. */
const HEAD_POSITION: [number, number, number] = [0, 1.6, 0];
/** Rest pose for the left controller, which only carries stick values. */
const LEFT_REST_POSE: Pose7 = [-0.2, 1.1, -0.3, 0, 0, 0, 1];

export function packetFromDevice(
  device: VirtualDevice,
  sticks: StickState,
  sequence: number,
  timestampNs: number,
): TrackingPacket {
  const devicePose: Pose7 = [
    device.position[0],
    device.position[1],
    device.position[2],
    device.orientation[0],
    device.orientation[1],
    device.orientation[2],
    device.orientation[3],
  ];
  const headOrientation = quatNormalize(
    quatMultiply(
      quatFromAxisAngle([0, 1, 0], device.headYaw),
      quatFromAxisAngle([1, 0, 0], device.headPitch),
    ),
  );
  const hands =
    device.handPreset === "none"
      ? null
      : {
          left: null,
          right: {
            isActive: 1 as const,
            scale: 1.0,
            HandJointLocations: placeHand(handPresetJoints(device.handPreset), devicePose),
          },
        };
  return {
    timestamp: timestampNs,
    sequence,
    head: {
      pose: [...HEAD_POSITION, ...headOrientation],
      status: 1,
      handMode: hands ? 2 : 1,
    },
    controllers: {
      left: {
        pose: [...LEFT_REST_POSE],
        axisX: sticks.leftX,
        axisY: sticks.leftY,
        axisClick: false,
        grip: 0,
        trigger: 0,
        primaryButton: false,
        secondaryButton: false,
        menuButton: false,
        side: "left",
      },
      right: {
        pose: devicePose,
        axisX: sticks.rightX,
        axisY: sticks.rightY,
        axisClick: false,
        grip: device.grip,
        trigger: device.trigger,
        primaryButton: device.primaryButton,
        secondaryButton: device.secondaryButton,
        menuButton: device.menuButton,
        side: "right",
      },
    },
    hands,
    body: null,
    trackers: [],
  };
}

/** Drift-free send gate on a fixed grid at min(frame rate, rateHz). */
export class RateGate {
  private readonly periodMs: number;
  private nextDueMs: number | null = null;

  constructor(rateHz: number = MAX_SEND_HZ) {
    this.periodMs = 1000 / rateHz;
  }

  due(nowMs: number): boolean {
    if (this.nextDueMs === null) {
      this.nextDueMs = nowMs + this.periodMs;
      return true;
    }
    if (nowMs < this.nextDueMs) {
      return false;
    }
    this.nextDueMs += this.periodMs;
    if (nowMs - this.nextDueMs > 3 * this.periodMs) {
      // stalled tab: re-anchor instead of bursting to catch up
      this.nextDueMs = nowMs + this.periodMs;
    }
    return true;
  }
}
