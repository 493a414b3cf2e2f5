/**
 * Connection and message pump for one teleoperation session.
 *
 * The client samples the input tracker at the server's tick rate and
 * streams `{action}` messages (a zero-action when idle, so the robot
 * holds). Key transitions also send immediately, which keeps the
 * key-to-wire latency well inside one tick; the server latches commands,
 * so the duplicate is harmless. While the socket is down, outbound
 * messages buffer for up to a second and are flushed on reconnect,
 * after which stale entries are dropped.
 */

import { InputTracker } from "./input.js";
import type { ClientMsg, ServerMsg } from "./protocol.js";
import { parseServerMsg } from "./protocol.js";
import { applyServerMsg, emptyView, setConnection } from "./session.js";
import type { SessionView } from "./session.js";

export interface SocketLike {
  readonly readyState: number; // WebSocket readyState: 0 connecting, 1 open
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export const SOCKET_OPEN = 1;
export const BUFFER_TTL_MS = 1000;
export const RECONNECT_DELAY_MS = 1000;
export const WIRE_LOG_LIMIT = 5000;

export interface ClientOptions {
  now?: () => number;
  reconnect?: boolean;
}

export class TeleopClient {
  view: SessionView = emptyView();
  readonly input = new InputTracker();
  /** Raw inbound frames, oldest first, for offline replay and audits. */
  readonly wireLog: string[] = [];
  onChange: ((view: SessionView) => void) | null = null;

  private socket: SocketLike | null = null;
  private readonly makeSocket: () => SocketLike;
  private readonly now: () => number;
  private readonly reconnect: boolean;
  private pending: { at: number; raw: string }[] = [];
  private tickTimer: ReturnType<typeof setInterval> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(makeSocket: () => SocketLike, opts: ClientOptions = {}) {
    this.makeSocket = makeSocket;
    this.now = opts.now ?? (() => Date.now());
    this.reconnect = opts.reconnect ?? true;
  }

  connect(): void {
    this.stopped = false;
    this.view = setConnection(this.view, "connecting");
    this.emitChange();
    const sock = this.makeSocket();
    this.socket = sock;
    sock.onopen = () => {
      this.view = setConnection(this.view, "open");
      this.flushPending();
      this.emitChange();
    };
    sock.onmessage = (ev) => this.handleFrame(ev.data);
    sock.onclose = () => {
      this.view = setConnection(this.view, "closed");
      this.stopTicking();
      this.emitChange();
      if (this.reconnect && !this.stopped) {
        this.reconnectTimer = setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
      }
    };
  }

  stop(): void {
    this.stopped = true;
    this.stopTicking();
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.socket?.close();
  }

  /** Handle a raw keyboard event code on key press. */
  keydown(code: string): void {
    const discrete = this.input.keydown(code);
    if (discrete) {
      this.send(discrete);
    } else if (this.input.moving()) {
      this.sendAction(); // do not wait for the next tick
    }
  }

  keyup(code: string): void {
    this.input.keyup(code);
  }

  pointerDrag(dxPx: number, dyPx: number): void {
    this.input.setDrag(dxPx, dyPx);
    this.sendAction();
  }

  pointerRelease(): void {
    this.input.clearDrag();
    this.sendAction();
  }

  requestReset(seed?: number): void {
    this.send(seed === undefined ? { type: "reset" } : { type: "reset", seed });
  }

  requestSave(): void {
    this.send({ type: "save_episode" });
  }

  send(msg: ClientMsg): void {
    const raw = JSON.stringify(msg);
    if (this.socket && this.socket.readyState === SOCKET_OPEN) {
      this.socket.send(raw);
      return;
    }
    this.prunePending();
    this.pending.push({ at: this.now(), raw });
  }

  private sendAction(): void {
    const aMax = this.view.hello?.a_max ?? 0;
    if (aMax <= 0) return;
    const [dx, dy] = this.input.vector(aMax);
    this.send({ type: "action", dx, dy });
  }

  private handleFrame(raw: string): void {
    this.wireLog.push(raw);
    if (this.wireLog.length > WIRE_LOG_LIMIT) {
      this.wireLog.splice(0, this.wireLog.length - WIRE_LOG_LIMIT);
    }
    const msg = parseServerMsg(raw);
    if (!msg) return;
    this.applyMessage(msg);
  }

  private applyMessage(msg: ServerMsg): void {
    this.view = applyServerMsg(this.view, msg);
    if (msg.type === "hello") this.startTicking(msg.tick_hz);
    this.emitChange();
  }

  private startTicking(tickHz: number): void {
    this.stopTicking();
    if (tickHz <= 0) return;
    this.tickTimer = setInterval(() => this.sendAction(), 1000 / tickHz);
  }

  private stopTicking(): void {
    if (this.tickTimer) {
      clearInterval(this.tickTimer);
      this.tickTimer = null;
    }
  }

  private flushPending(): void {
    this.prunePending();
    const sock = this.socket;
    if (!sock || sock.readyState !== SOCKET_OPEN) return;
    for (const { raw } of this.pending) sock.send(raw);
    this.pending = [];
  }

  private prunePending(): void {
    const cutoff = this.now() - BUFFER_TTL_MS;
    this.pending = this.pending.filter((p) => p.at >= cutoff);
  }

  private emitChange(): void {
    this.onChange?.(this.view);
  }
}
