/**
 * Gateway connection management.
 *
 * One GatewayClient owns the socket lifecycle: connect, parse frames,
 * coalesce snapshots, reconnect with exponential backoff after a drop.
 * Network events never call into rendering; the render loop polls
 * latest() on its own schedule and always sees the newest frame only.
 * A snapshot that gets overwritten before anyone consumed it counts as
 * a dropped frame, which is exactly the "rendering is lagging" signal
 * the HUD shows.
 *
 * The socket constructor and the timer functions are injectable so tests
 * can run the whole state machine synchronously.
 */

import { parseFrame, encodeInput, SchemaError, type Hello, type Snapshot, type EndFrame } from "./protocol.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type ClientStatus = "idle" | "connecting" | "open" | "reconnecting" | "ended" | "error";

export interface ClientOptions {
  backoffBaseMs?: number;
  backoffCapMs?: number;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export class GatewayClient {
  status: ClientStatus = "idle";
  hello: Hello | null = null;
  end: EndFrame | null = null;
  lastError: string | null = null;
  lastServerComplaint: string | null = null;
  droppedFrames = 0;
  staleFrames = 0;
  reconnects = 0;

  private readonly url: string;
  private readonly factory: SocketFactory;
  private readonly backoffBaseMs: number;
  private readonly backoffCapMs: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;

  private socket: SocketLike | null = null;
  private pending: Snapshot | null = null;
  private lastTick = -1;
  private ackTickSeen = -1;
  private backoffMs: number;
  private retryHandle: unknown = null;

  constructor(url: string, factory: SocketFactory, opts: ClientOptions = {}) {
    this.url = url;
    this.factory = factory;
    this.backoffBaseMs = opts.backoffBaseMs ?? 500;
    this.backoffCapMs = opts.backoffCapMs ?? 8000;
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = opts.cancel ?? ((h) => clearTimeout(h as ReturnType<typeof setTimeout>));
    this.backoffMs = this.backoffBaseMs;
  }

  connect(): void {
    if (this.status === "ended" || this.status === "error") return;
    this.status = this.status === "idle" ? "connecting" : "reconnecting";
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => {
      if (this.socket !== sock) return;
      this.status = "open";
      this.backoffMs = this.backoffBaseMs;
    };
    sock.onmessage = (ev) => {
      if (this.socket !== sock) return;
      if (typeof ev.data === "string") this.handleFrame(ev.data);
    };
    sock.onclose = () => {
      if (this.socket !== sock) return;
      this.socket = null;
      if (this.status === "ended" || this.status === "error") return;
      this.scheduleReconnect();
    };
    sock.onerror = () => {
      // The close handler does the actual cleanup; browsers fire both.
    };
  }

  /** True while pedal input can actually reach the gateway. */
  get inputLive(): boolean {
    return this.status === "open" && this.hello !== null;
  }

  /** Monotone maximum of ack_tick over everything received. */
  get ackTick(): number {
    return this.ackTickSeen;
  }

  /**
   * Hand the newest unseen snapshot to the caller, or null. Latest wins:
   * anything that arrived between two polls has already been discarded.
   */
  latest(): Snapshot | null {
    const s = this.pending;
    this.pending = null;
    return s;
  }

  sendInput(throttle: number, brake: number, steering: number): boolean {
    if (!this.inputLive || !this.socket) return false;
    this.socket.send(encodeInput(throttle, brake, steering));
    return true;
  }

  closeForever(): void {
    this.status = "ended";
    if (this.retryHandle !== null) {
      this.cancel(this.retryHandle);
      this.retryHandle = null;
    }
    this.socket?.close();
    this.socket = null;
  }

  private handleFrame(raw: string): void {
    let frame;
    try {
      frame = parseFrame(raw);
    } catch (e) {
      if (e instanceof SchemaError) {
        // A malformed frame means we no longer understand the server.
        // Stop rendering and stop reconnecting; the banner shows why.
        this.lastError = e.message;
        this.status = "error";
        this.socket?.close();
        this.socket = null;
        return;
      }
      throw e;
    }
    if (frame.type === "hello") {
      this.hello = frame;
      return;
    }
    if (frame.type === "pong") {
      return;
    }
    if (frame.type === "error") {
      // The server rejected something we sent; keep running but surface it.
      this.lastServerComplaint = frame.error;
      return;
    }
    if (frame.type === "end") {
      this.end = frame;
      this.status = "ended";
      this.socket?.close();
      this.socket = null;
      return;
    }
    // Out-of-order protection: a frame older than one already delivered
    // is dropped outright. Equal ticks pass so a paused reconnect frame
    // can refresh the view.
    if (frame.tick < this.lastTick) {
      this.staleFrames += 1;
      return;
    }
    if (this.pending !== null) this.droppedFrames += 1;
    this.pending = frame;
    this.lastTick = frame.tick;
    if (frame.ack_tick > this.ackTickSeen) this.ackTickSeen = frame.ack_tick;
  }

  private scheduleReconnect(): void {
    this.status = "reconnecting";
    this.reconnects += 1;
    const wait = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, this.backoffCapMs);
    this.retryHandle = this.schedule(() => {
      this.retryHandle = null;
      this.connect();
    }, wait);
  }
}
