/** Browser entry point: virtual XR device in, robot state out.
 *
 * Single-threaded by construction — socket callbacks only post snapshots
 * and status flags; the animation-frame loop samples inputs, emits at most
 * one packet, consumes at most one state frame, and redraws.
 */

import { ChainsPayload } from "./chain.js";
import {
  advanceHead,
  advanceRamps,
  dragRotate,
  dragTranslate,
  initialDevice,
  PresetSelection,
  scrollDepth,
  sticksFromKeys,
  VirtualDevice,
} from "./device.js";
import { MAX_SEND_HZ, packetFromDevice, RateGate } from "./emit.js";
import { nowNs } from "./packet.js";
import {
  connectStream,
  createSnapshotSlot,
  SocketStatus,
  StateFrame,
} from "./net.js";
import { defaultView, drawScene } from "./render.js";
import { streamFreshness } from "./staleness.js";

const PRESET_KEYS: Record<string, PresetSelection> = {
  "1": "open",
  "2": "pinch",
  "3": "point",
  "0": "none",
};

async function loadChains(): Promise<ChainsPayload> {
  for (;;) {
    try {
      const response = await fetch("/chains.json");
      if (response.ok) {
        return (await response.json()) as ChainsPayload;
      }
    } catch {
      // server not up yet; retry below
    }
    await new Promise((resolve) => setTimeout(resolve, 1000));
  }
}

function mustGet<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (element === null) {
    throw new Error(`missing #${id}`);
  }
  return element as T;
}

async function start() {
  const canvas = mustGet<HTMLCanvasElement>("scene");
  const banner = mustGet<HTMLDivElement>("banner");
  const hud = mustGet<HTMLDivElement>("hud");
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    throw new Error("canvas 2d context unavailable");
  }

  const payload = await loadChains();
  const sendRate = Math.min(MAX_SEND_HZ, payload.rate_hz);

  let device: VirtualDevice = initialDevice();
  const keysDown = new Set<string>();
  let dragging = false;
  let lastMouse: [number, number] | null = null;

  const slot = createSnapshotSlot<StateFrame>();
  let status: SocketStatus = "connecting";
  const connection = connectStream(payload.ws_url, {
    onState: (frame) => slot.post(frame),
    onStatus: (next) => {
      status = next;
    },
  });
  window.addEventListener("beforeunload", () => connection.close());

  canvas.addEventListener("mousedown", (event) => {
    dragging = true;
    lastMouse = [event.clientX, event.clientY];
  });
  window.addEventListener("mouseup", () => {
    dragging = false;
    lastMouse = null;
  });
  window.addEventListener("mousemove", (event) => {
    if (!dragging || lastMouse === null) {
      return;
    }
    const dx = event.clientX - lastMouse[0];
    const dy = event.clientY - lastMouse[1];
    lastMouse = [event.clientX, event.clientY];
    device = event.shiftKey ? dragRotate(device, dx, dy) : dragTranslate(device, dx, dy);
  });
  canvas.addEventListener(
    "wheel",
    (event) => {
      event.preventDefault();
      device = scrollDepth(device, event.deltaY);
    },
    { passive: false },
  );

  window.addEventListener("keydown", (event) => {
    const key = event.key.toLowerCase();
    if (key === " " || key.startsWith("arrow")) {
      event.preventDefault();
    }
    keysDown.add(key);
    if (key === " ") {
      device = { ...device, gripHeld: true };
    } else if (key === "f") {
      device = { ...device, triggerHeld: true };
    } else if (key === "z") {
      device = { ...device, primaryButton: true };
    } else if (key === "x") {
      device = { ...device, secondaryButton: true };
    } else if (key === "c") {
      device = { ...device, menuButton: true };
    } else if (key in PRESET_KEYS) {
      device = { ...device, handPreset: PRESET_KEYS[key] };
    }
  });
  window.addEventListener("keyup", (event) => {
    const key = event.key.toLowerCase();
    keysDown.delete(key);
    if (key === " ") {
      device = { ...device, gripHeld: false };
    } else if (key === "f") {
      device = { ...device, triggerHeld: false };
    } else if (key === "z") {
      device = { ...device, primaryButton: false };
    } else if (key === "x") {
      device = { ...device, secondaryButton: false };
    } else if (key === "c") {
      device = { ...device, menuButton: false };
    }
  });
  window.addEventListener("blur", () => {
    keysDown.clear();
    device = { ...device, gripHeld: false, triggerHeld: false };
  });

  const gate = new RateGate(sendRate);
  let sequence = 0;
  let frame: StateFrame | null = null;
  let frameSeenAtMs: number | null = null;
  let lastTickMs: number | null = null;

  const resize = () => {
    canvas.width = window.innerWidth;
    canvas.height = window.innerHeight;
  };
  resize();
  window.addEventListener("resize", resize);

  const tick = (nowMs: number) => {
    const dtMs = lastTickMs === null ? 1000 / 60 : Math.min(100, nowMs - lastTickMs);
    lastTickMs = nowMs;

    device = advanceRamps(device, dtMs);
    device = advanceHead(device, keysDown, dtMs);
    const sticks = sticksFromKeys(keysDown);

    const snapshot = slot.take();
    if (snapshot !== null) {
      frame = snapshot;
      frameSeenAtMs = nowMs;
    }
    const freshness = streamFreshness(frameSeenAtMs, nowMs);

    if (gate.due(nowMs)) {
      const packet = packetFromDevice(device, sticks, sequence, nowNs());
      sequence += 1;
      connection.send(JSON.stringify(packet));
    }

    const view = defaultView(canvas.width, canvas.height);
    drawScene(ctx, { chains: payload.chains, frame, freshness }, view);

    if (status !== "connected") {
      banner.textContent =
        status === "connecting" ? "connecting…" : "disconnected — reconnecting…";
      banner.className = status;
    } else if (freshness === "stale") {
      banner.textContent = "state stream stale";
      banner.className = "stale";
    } else {
      banner.textContent = "";
      banner.className = "hidden";
    }

    const p = device.position;
    hud.textContent =
      `device [${p[0].toFixed(2)}, ${p[1].toFixed(2)}, ${p[2].toFixed(2)}]  ` +
      `grip ${(device.grip * 100).toFixed(0)}%  trigger ${(device.trigger * 100).toFixed(0)}%  ` +
      `hand ${device.handPreset}  ` +
      `sticks L[${sticks.leftX} ${sticks.leftY}] R[${sticks.rightX}]  seq ${sequence}`;

    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
}

start().catch((error) => {
  console.error("viewer failed to start:", error);
  const banner = document.getElementById("banner");
  if (banner !== null) {
    banner.textContent = String(error);
    banner.className = "disconnected";
  }
});
