/** Canvas renderer: robot chains as link segments, mobile base, gimbal.
 *
 * Everything is drawn in the robot world frame (x forward, y left, z up)
 * through a fixed orthographic camera. A stale stream keeps the last frame
 * on screen but grays the whole scene; no frame at all draws only the grid.
 */

import { ChainDescription, forwardKinematics, linkSegments } from "./chain.js";
import { composePose, Pose7, quatFromAxisAngle, rotateVec, Vec3 } from "./geometry.js";
import { StateFrame } from "./net.js";
import { Freshness } from "./staleness.js";

export interface ViewParams {
  widthPx: number;
  heightPx: number;
  scalePxPerM: number;
  azimuth: number;
  elevation: number;
  center: Vec3;
}

export function defaultView(widthPx: number, heightPx: number): ViewParams {
  return {
    widthPx,
    heightPx,
    scalePxPerM: Math.min(widthPx, heightPx) * 0.45,
    azimuth: 2.45,
    elevation: 0.45,
    center: [0.25, 0, 0.45],
  };
}

/** Orthographic projection onto the view plane; screen y grows downward. */
export function project(p: Vec3, view: ViewParams): [number, number] {
  const ca = Math.cos(view.azimuth);
  const sa = Math.sin(view.azimuth);
  const ce = Math.cos(view.elevation);
  const se = Math.sin(view.elevation);
  const dx = p[0] - view.center[0];
  const dy = p[1] - view.center[1];
  const dz = p[2] - view.center[2];
  const right = -sa * dx + ca * dy;
  const up = -se * ca * dx - se * sa * dy + ce * dz;
  return [
    view.widthPx / 2 + right * view.scalePxPerM,
    view.heightPx / 2 - up * view.scalePxPerM,
  ];
}

export interface Scene {
  chains: Record<string, ChainDescription>;
  frame: StateFrame | null;
  freshness: Freshness;
}

const CHAIN_COLORS = ["#5ec8f8", "#f8a25e", "#8ef88e", "#f85ec8", "#f8f85e"];
/** Where chain roots sit on the mobile base deck. */
const MOUNT: Pose7 = [0.1, 0, 0.18, 0, 0, 0, 1];
const BASE_HALF_LENGTH = 0.26;
const BASE_HALF_WIDTH = 0.18;
const MAST_HEIGHT = 0.55;

function basePose(frame: StateFrame): Pose7 {
  const q = quatFromAxisAngle([0, 0, 1], frame.base[2]);
  return [frame.base[0], frame.base[1], 0, q[0], q[1], q[2], q[3]];
}

function line(ctx: CanvasRenderingContext2D, a: Vec3, b: Vec3, view: ViewParams) {
  const [ax, ay] = project(a, view);
  const [bx, by] = project(b, view);
  ctx.beginPath();
  ctx.moveTo(ax, ay);
  ctx.lineTo(bx, by);
  ctx.stroke();
}

function worldPoint(pose: Pose7, local: Vec3): Vec3 {
  const p = rotateVec([pose[3], pose[4], pose[5], pose[6]], local);
  return [pose[0] + p[0], pose[1] + p[1], pose[2] + p[2]];
}

function drawGrid(ctx: CanvasRenderingContext2D, view: ViewParams) {
  ctx.strokeStyle = "#2a3038";
  ctx.lineWidth = 1;
  for (let i = -4; i <= 4; i++) {
    line(ctx, [i * 0.25, -1, 0], [i * 0.25, 1, 0], view);
    line(ctx, [-1, i * 0.25, 0], [1, i * 0.25, 0], view);
  }
}

function drawBase(ctx: CanvasRenderingContext2D, pose: Pose7, view: ViewParams) {
  const corners: Vec3[] = [
    [BASE_HALF_LENGTH, BASE_HALF_WIDTH, 0.02],
    [BASE_HALF_LENGTH, -BASE_HALF_WIDTH, 0.02],
    [-BASE_HALF_LENGTH, -BASE_HALF_WIDTH, 0.02],
    [-BASE_HALF_LENGTH, BASE_HALF_WIDTH, 0.02],
  ];
  ctx.strokeStyle = "#9aa7b4";
  ctx.lineWidth = 2;
  for (let i = 0; i < 4; i++) {
    line(ctx, worldPoint(pose, corners[i]), worldPoint(pose, corners[(i + 1) % 4]), view);
  }
  // heading arrow out of the nose
  ctx.strokeStyle = "#e8f0f8";
  line(ctx, worldPoint(pose, [BASE_HALF_LENGTH, 0, 0.02]), worldPoint(pose, [BASE_HALF_LENGTH + 0.12, 0, 0.02]), view);
}

function drawGimbal(
  ctx: CanvasRenderingContext2D,
  pose: Pose7,
  yaw: number,
  pitch: number,
  view: ViewParams,
) {
  const mastBase = worldPoint(pose, [-0.1, 0, 0.04]);
  const mastTop = worldPoint(pose, [-0.1, 0, MAST_HEIGHT]);
  ctx.strokeStyle = "#6a7683";
  ctx.lineWidth = 2;
  line(ctx, mastBase, mastTop, view);
  // aim needle: yaw about the mast, pitch off horizontal
  const aim: Vec3 = [
    Math.cos(pitch) * Math.cos(yaw),
    Math.cos(pitch) * Math.sin(yaw),
    Math.sin(pitch),
  ];
  const needle = rotateVec([pose[3], pose[4], pose[5], pose[6]], aim);
  const tip: Vec3 = [
    mastTop[0] + needle[0] * 0.2,
    mastTop[1] + needle[1] * 0.2,
    mastTop[2] + needle[2] * 0.2,
  ];
  ctx.strokeStyle = "#f8dc5e";
  line(ctx, mastTop, tip, view);
}

function drawChains(ctx: CanvasRenderingContext2D, scene: Scene, mount: Pose7, view: ViewParams) {
  const ids = Object.keys(scene.chains).sort();
  ids.forEach((id, index) => {
    const q = scene.frame?.chains[id];
    if (q === undefined) {
      return;
    }
    const chain = scene.chains[id];
    const poses = forwardKinematics(chain, q);
    ctx.strokeStyle = CHAIN_COLORS[index % CHAIN_COLORS.length];
    ctx.lineWidth = 3;
    for (const [a, b] of linkSegments(chain, poses)) {
      const wa = worldPoint(mount, a);
      const wb = worldPoint(mount, b);
      if (wa[0] !== wb[0] || wa[1] !== wb[1] || wa[2] !== wb[2]) {
        line(ctx, wa, wb, view);
      }
    }
    ctx.fillStyle = ctx.strokeStyle;
    for (const pose of Object.values(poses)) {
      const [px, py] = project(worldPoint(mount, [pose[0], pose[1], pose[2]]), view);
      ctx.beginPath();
      ctx.arc(px, py, 2.5, 0, Math.PI * 2);
      ctx.fill();
    }
  });
}

function drawGrippers(ctx: CanvasRenderingContext2D, frame: StateFrame, view: ViewParams) {
  const sides = Object.keys(frame.grippers).sort();
  ctx.font = "12px monospace";
  sides.forEach((side, index) => {
    const value = frame.grippers[side];
    const x = view.widthPx - 150;
    const y = view.heightPx - 24 - index * 18;
    ctx.fillStyle = "#9aa7b4";
    ctx.fillText(`${side} grip`, x, y);
    ctx.strokeStyle = "#9aa7b4";
    ctx.strokeRect(x + 70, y - 9, 60, 10);
    ctx.fillStyle = "#5ec8f8";
    ctx.fillRect(x + 70, y - 9, 60 * Math.min(1, Math.max(0, value)), 10);
  });
}

export function drawScene(ctx: CanvasRenderingContext2D, scene: Scene, view: ViewParams) {
  ctx.fillStyle = "#14181d";
  ctx.fillRect(0, 0, view.widthPx, view.heightPx);
  drawGrid(ctx, view);

  if (scene.frame !== null) {
    const base = basePose(scene.frame);
    const mount = composePose(base, MOUNT);
    drawBase(ctx, base, view);
    drawGimbal(ctx, base, scene.frame.gimbal[0], scene.frame.gimbal[1], view);
    drawChains(ctx, scene, mount, view);
    drawGrippers(ctx, scene.frame, view);
  } else {
    ctx.fillStyle = "#9aa7b4";
    ctx.font = "14px monospace";
    ctx.fillText("waiting for state stream…", view.widthPx / 2 - 90, view.heightPx / 2);
  }

  if (scene.freshness === "stale") {
    ctx.fillStyle = "rgba(90, 95, 100, 0.65)";
    ctx.fillRect(0, 0, view.widthPx, view.heightPx);
  }
}
