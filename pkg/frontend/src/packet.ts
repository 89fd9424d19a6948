/** Wire shape of one XR tracking sample.
 *
 * Mirrors the service's packet schema: disabled sections are explicit nulls
 * so the document shape never changes, poses are [x, y, z, qx, qy, qz, qw]
 * in the XR frame (x right, y up, z backward), timestamp is sender-clock
 * nanoseconds and sequence must be strictly increasing per connection.
 */

export type WirePose = number[];

export interface HeadSection {
  pose: WirePose;
  status: 0 | 1;
  /** 0 = no hand input, 1 = controllers, 2 = hand tracking */
  handMode: 0 | 1 | 2;
}

export interface ControllerSection {
  pose: WirePose;
  axisX: number;
  axisY: number;
  axisClick: boolean;
  grip: number;
  trigger: number;
  primaryButton: boolean;
  secondaryButton: boolean;
  menuButton: boolean;
  side: "left" | "right";
}

export interface HandJoint {
  pose: WirePose;
  status: number;
  radius: number;
}

export interface HandSection {
  isActive: 0 | 1;
  scale: number;
  HandJointLocations: HandJoint[];
}

export interface TrackerSection {
  p: WirePose;
  va: number[];
  wva: number[];
  sn: string;
}

export interface TrackingPacket {
  timestamp: number;
  sequence: number;
  head: HeadSection;
  controllers: {
    left: ControllerSection | null;
    right: ControllerSection | null;
  } | null;
  hands: {
    left: HandSection | null;
    right: HandSection | null;
  } | null;
  /** The virtual device never synthesizes body tracking. */
  body: null;
  trackers: TrackerSection[];
}

/** Sender-clock nanoseconds; integral so it survives JSON round-trips. */
export function nowNs(): number {
  return Math.round((performance.timeOrigin + performance.now()) * 1e6);
}
