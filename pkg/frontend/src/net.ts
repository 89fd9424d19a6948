/** Websocket client for the teleop service.
 *
 * The socket is bidirectional: tracking packets go out, simulated state
 * frames come back on the same connection. Network callbacks never touch
 * the scene directly — they post into a latest-only slot that the frame
 * loop consumes at most once per frame, keeping everything single-threaded
 * from the renderer's point of view.
 */

export interface StateFrame {
  t: number;
  chains: Record<string, number[]>;
  base: [number, number, number];
  gimbal: [number, number];
  grippers: Record<string, number>;
}

export type SocketStatus = "connecting" | "connected" | "disconnected";

export interface SnapshotSlot<T> {
  post(value: T): void;
  /** Latest value since the last take, or null. Taking clears the slot. */
  take(): T | null;
}

export function createSnapshotSlot<T>(): SnapshotSlot<T> {
  let latest: T | null = null;
  return {
    post(value: T) {
      latest = value;
    },
    take(): T | null {
      const value = latest;
      latest = null;
      return value;
    },
  };
}

export interface StreamHandlers {
  onState(frame: StateFrame): void;
  onStatus(status: SocketStatus): void;
}

export interface StreamConnection {
  send(text: string): boolean;
  close(): void;
}

export const RECONNECT_DELAY_MS = 1000;

export function connectStream(url: string, handlers: StreamHandlers): StreamConnection {
  let ws: WebSocket | null = null;
  let closed = false;

  const open = () => {
    handlers.onStatus("connecting");
    ws = new WebSocket(url);
    ws.onopen = () => handlers.onStatus("connected");
    ws.onmessage = (event: MessageEvent) => {
      try {
        handlers.onState(JSON.parse(String(event.data)) as StateFrame);
      } catch (error) {
        console.warn("dropping unparseable state frame:", error);
      }
    };
    ws.onclose = () => {
      ws = null;
      handlers.onStatus("disconnected");
      if (!closed) {
        setTimeout(open, RECONNECT_DELAY_MS);
      }
    };
    ws.onerror = () => {
      // the close handler owns reconnection
    };
  };
  open();

  return {
    send(text: string): boolean {
      if (ws !== null && ws.readyState === WebSocket.OPEN) {
        ws.send(text);
        return true;
      }
      return false;
    },
    close() {
      closed = true;
      if (ws !== null) {
        ws.close();
      }
    },
  };
}
