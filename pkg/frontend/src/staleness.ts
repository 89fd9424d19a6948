/** Stream freshness: how the viewer decides to gray the scene out. */

export const STALE_AFTER_MS = 500;

export type Freshness = "waiting" | "live" | "stale";

export function streamFreshness(lastFrameMs: number | null, nowMs: number): Freshness {
  if (lastFrameMs === null) {
    return "waiting";
  }
  return nowMs - lastFrameMs > STALE_AFTER_MS ? "stale" : "live";
}
