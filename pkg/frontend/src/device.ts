/** Virtual XR device: keyboard + mouse folded into controller-style values.
 *
 * All transitions are pure functions so the event handlers just compute the
 * next state and the emit loop samples whatever is current at send time.
 * The drag plane is the operator's view plane in the XR frame (x right,
 * y up), and the wheel moves along view depth (z backward).
 */

import {
  addScaled,
  Quat,
  quatFromAxisAngle,
  quatMultiply,
  quatNormalize,
  Vec3,
} from "./geometry.js";
import { HandPresetName } from "./presets.js";

export type PresetSelection = HandPresetName | "none";

export interface VirtualDevice {
  position: Vec3;
  orientation: Quat;
  grip: number;
  trigger: number;
  gripHeld: boolean;
  triggerHeld: boolean;
  handPreset: PresetSelection;
  primaryButton: boolean;
  secondaryButton: boolean;
  menuButton: boolean;
  headYaw: number;
  headPitch: number;
}

/** Full swing of the grip or trigger value, press and release alike. */
export const RAMP_MS = 100;

export const TRANSLATE_PX_PER_M = 400;
export const DEPTH_M_PER_WHEEL_UNIT = 0.0005;
export const ROTATE_RAD_PER_PX = 0.008;
export const HEAD_RATE_RAD_PER_S = 1.2;
export const HEAD_PITCH_RANGE = 1.2;

export function initialDevice(): VirtualDevice {
  return {
    position: [0.1, 1.2, -0.4],
    orientation: [0, 0, 0, 1],
    grip: 0,
    trigger: 0,
    gripHeld: false,
    triggerHeld: false,
    handPreset: "none",
    primaryButton: false,
    secondaryButton: false,
    menuButton: false,
    headYaw: 0,
    headPitch: 0,
  };
}

/** Plain drag: translate in the view plane. Screen y grows downward. */
export function dragTranslate(device: VirtualDevice, dxPx: number, dyPx: number): VirtualDevice {
  let position = addScaled(device.position, [1, 0, 0], dxPx / TRANSLATE_PX_PER_M);
  position = addScaled(position, [0, 1, 0], -dyPx / TRANSLATE_PX_PER_M);
  return { ...device, position };
}

/** Wheel: depth. Scrolling away from the user pushes the hand deeper (-z). */
export function scrollDepth(device: VirtualDevice, deltaY: number): VirtualDevice {
  return {
    ...device,
    position: addScaled(device.position, [0, 0, 1], deltaY * DEPTH_M_PER_WHEEL_UNIT),
  };
}

/** Modifier drag: rotate. Horizontal yaws about world up, vertical pitches. */
export function dragRotate(device: VirtualDevice, dxPx: number, dyPx: number): VirtualDevice {
  const yaw = quatFromAxisAngle([0, 1, 0], -dxPx * ROTATE_RAD_PER_PX);
  const pitch = quatFromAxisAngle([1, 0, 0], -dyPx * ROTATE_RAD_PER_PX);
  const orientation = quatNormalize(
    quatMultiply(quatMultiply(yaw, pitch), device.orientation),
  );
  return { ...device, orientation };
}

function ramp(value: number, held: boolean, dtMs: number): number {
  const next = value + (held ? dtMs : -dtMs) / RAMP_MS;
  // snap to the rails so accumulated rounding can't park the value at 1-ulp
  if (next >= 1 - 1e-9) {
    return 1;
  }
  if (next <= 1e-9) {
    return 0;
  }
  return next;
}

/** Advance the analog grip/trigger values by one frame. */
export function advanceRamps(device: VirtualDevice, dtMs: number): VirtualDevice {
  return {
    ...device,
    grip: ramp(device.grip, device.gripHeld, dtMs),
    trigger: ramp(device.trigger, device.triggerHeld, dtMs),
  };
}

export interface StickState {
  leftX: number;
  leftY: number;
  rightX: number;
  rightY: number;
}

/** WASD drives the left stick (planar base velocity), Q/E the right stick X
 * (turn rate). Opposing keys cancel. Key names are lowercase. */
export function sticksFromKeys(down: ReadonlySet<string>): StickState {
  const axis = (negative: string, positive: string) =>
    (down.has(positive) ? 1 : 0) - (down.has(negative) ? 1 : 0);
  return {
    leftX: axis("a", "d"),
    leftY: axis("s", "w"),
    rightX: axis("q", "e"),
    rightY: 0,
  };
}

/** Arrow keys pan/tilt the virtual head (which aims the camera gimbal). */
export function advanceHead(
  device: VirtualDevice,
  down: ReadonlySet<string>,
  dtMs: number,
): VirtualDevice {
  const step = (dtMs / 1000) * HEAD_RATE_RAD_PER_S;
  const yawDir = (down.has("arrowleft") ? 1 : 0) - (down.has("arrowright") ? 1 : 0);
  const pitchDir = (down.has("arrowup") ? 1 : 0) - (down.has("arrowdown") ? 1 : 0);
  const clamp = (v: number, r: number) => Math.min(r, Math.max(-r, v));
  return {
    ...device,
    headYaw: clamp(device.headYaw + yawDir * step, Math.PI),
    headPitch: clamp(device.headPitch + pitchDir * step, HEAD_PITCH_RANGE),
  };
}
