// Session socket: parse inbound frames, track staleness, reconnect with
// backoff. Injectable WebSocket factory keeps this testable off-browser.

import { parseServerMessage, ServerMessage } from "./protocol";

export type SocketLike = {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
};

const OPEN = 1;
export const STALE_AFTER_MS = 1000;

export class SessionConnection {
  private socket: SocketLike | null = null;
  private lastStateMs: number | null = null;
  private reconnectAttempts = 0;
  private closed = false;
  state: "connecting" | "open" | "closed" = "connecting";

  constructor(
    private url: string,
    private onMessage: (msg: ServerMessage) => void,
    private makeSocket: (url: string) => SocketLike = (u) => new WebSocket(u) as SocketLike,
    private nowMs: () => number = () => performance.now(),
  ) {
    this.connect();
  }

  private connect(): void {
    this.state = "connecting";
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.state = "open";
      this.reconnectAttempts = 0;
    };
    socket.onclose = () => {
      this.state = "closed";
      if (!this.closed) this.scheduleReconnect();
    };
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) return; // not ours; never let a bad frame kill the view
      if (msg.type === "state") this.lastStateMs = this.nowMs();
      this.onMessage(msg);
    };
  }

  private scheduleReconnect(): void {
    const delay = Math.min(500 * 2 ** this.reconnectAttempts, 10_000);
    this.reconnectAttempts += 1;
    setTimeout(() => {
      if (!this.closed) this.connect();
    }, delay);
  }

  /** True when connected but no state message has arrived for over a second. */
  stale(): boolean {
    return (
      this.state === "open" &&
      this.lastStateMs !== null &&
      this.nowMs() - this.lastStateMs > STALE_AFTER_MS
    );
  }

  send(data: string): boolean {
    if (this.socket && this.socket.readyState === OPEN) {
      this.socket.send(data);
      return true;
    }
    return false; // disconnected: inputs are dropped
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
