/** Telemetry WebSocket with automatic reconnection. */

import type { TelemetryFrame } from "./types.js";

export interface WebSocketLike {
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

const defaultFactory: WebSocketFactory = (url) => new WebSocket(url) as unknown as WebSocketLike;

export class TelemetryFeed {
  private socket: WebSocketLike | null = null;
  private closed = false;
  private frameHandlers: Array<(frame: TelemetryFrame) => void> = [];
  private statusHandlers: Array<(status: ConnectionStatus) => void> = [];

  constructor(
    private readonly url: string,
    private readonly factory: WebSocketFactory = defaultFactory,
    private readonly reconnectDelayMs = 1000,
  ) {}

  onFrame(handler: (frame: TelemetryFrame) => void): void {
    this.frameHandlers.push(handler);
  }

  onStatus(handler: (status: ConnectionStatus) => void): void {
    this.statusHandlers.push(handler);
  }

  private emitStatus(status: ConnectionStatus): void {
    for (const handler of this.statusHandlers) {
      handler(status);
    }
  }

  connect(): void {
    if (this.closed) {
      return;
    }
    this.emitStatus("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => this.emitStatus("connected");
    socket.onmessage = (event) => {
      const frame = JSON.parse(event.data) as TelemetryFrame;
      for (const handler of this.frameHandlers) {
        handler(frame);
      }
    };
    socket.onclose = () => {
      this.socket = null;
      if (!this.closed) {
        this.emitStatus("disconnected");
        setTimeout(() => this.connect(), this.reconnectDelayMs);
      }
    };
    socket.onerror = () => {
      // the close handler owns reconnection
    };
  }

  close(): void {
    this.closed = true;
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
    this.emitStatus("disconnected");
  }
}
