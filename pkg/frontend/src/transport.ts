/**
 * Line-based transports. The engine speaks newline-delimited JSON over TCP;
 * tests may substitute an in-memory transport.
 */

import * as net from "node:net";

export type ConnectionStatus =
  | "idle"
  | "connecting"
  | "connected"
  | "disconnected"
  | "version-mismatch";

export interface Transport {
  connect(): void;
  send(line: string): void;
  close(): void;
  onLine(cb: (line: string) => void): void;
  onStatus(cb: (status: ConnectionStatus) => void): void;
}

export interface TcpOptions {
  host: string;
  port: number;
  /** backoff schedule in ms; the last entry repeats */
  backoff?: number[];
  maxAttempts?: number;
}

const DEFAULT_BACKOFF = [100, 250, 500, 1000];

/** TCP client with automatic reconnect and exponential-ish backoff. */
export class TcpTransport implements Transport {
  private socket: net.Socket | null = null;
  private buffer = "";
  private lineCb: (line: string) => void = () => undefined;
  private statusCb: (status: ConnectionStatus) => void = () => undefined;
  private attempts = 0;
  private closed = false;
  private timer: NodeJS.Timeout | null = null;

  constructor(private readonly options: TcpOptions) {}

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onStatus(cb: (status: ConnectionStatus) => void): void {
    this.statusCb = cb;
  }

  connect(): void {
    if (this.closed) return;
    this.statusCb("connecting");
    const socket = net.createConnection({
      host: this.options.host,
      port: this.options.port,
    });
    this.socket = socket;
    socket.setEncoding("utf-8");
    socket.on("connect", () => {
      this.attempts = 0;
      this.statusCb("connected");
    });
    socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let idx = this.buffer.indexOf("\n");
      while (idx >= 0) {
        const line = this.buffer.slice(0, idx).trim();
        this.buffer = this.buffer.slice(idx + 1);
        if (line) this.lineCb(line);
        idx = this.buffer.indexOf("\n");
      }
    });
    const retry = () => {
      if (this.closed) return;
      this.statusCb("disconnected");
      const max = this.options.maxAttempts ?? Infinity;
      if (this.attempts >= max) return;
      const schedule = this.options.backoff ?? DEFAULT_BACKOFF;
      const wait = schedule[Math.min(this.attempts, schedule.length - 1)] ?? 1000;
      this.attempts += 1;
      this.timer = setTimeout(() => this.connect(), wait);
    };
    socket.on("error", () => {
      socket.destroy();
    });
    socket.on("close", retry);
  }

  send(line: string): void {
    if (!this.socket || this.socket.destroyed) {
      throw new Error("transport not connected");
    }
    this.socket.write(line + "\n");
  }

  close(): void {
    this.closed = true;
    if (this.timer) clearTimeout(this.timer);
    this.socket?.destroy();
    this.statusCb("idle");
  }
}

/** Deterministic in-memory transport for tests. */
export class MemoryTransport implements Transport {
  sent: string[] = [];
  private lineCb: (line: string) => void = () => undefined;
  private statusCb: (status: ConnectionStatus) => void = () => undefined;

  connect(): void {
    this.statusCb("connected");
  }

  send(line: string): void {
    this.sent.push(line);
  }

  close(): void {
    this.statusCb("idle");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onStatus(cb: (status: ConnectionStatus) => void): void {
    this.statusCb = cb;
  }

  /** Test hook: deliver one line from the "engine". */
  deliver(line: string): void {
    this.lineCb(line);
  }
}
