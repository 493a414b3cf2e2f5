/** Shared fixtures: canned server messages and fakes for socket/surface. */

import type { SocketLike } from "../src/client.js";
import type { HelloMsg, StateMsg, Vec2 } from "../src/protocol.js";
import type { Surface } from "../src/renderer.js";

export function helloMsg(over: Partial<HelloMsg> = {}): HelloMsg {
  return {
    type: "hello",
    tick_hz: 20,
    a_max: 0.01,
    goal_pos: [0.3, 0.0],
    success_threshold: 0.1,
    workspace_half: 0.5,
    ee_radius: 0.02,
    debug_reveal: false,
    ...over,
  };
}

export function stateMsg(over: Partial<StateMsg> = {}): StateMsg {
  return {
    type: "state",
    step: 1,
    mode: 0,
    ee_pos: [-0.1, -0.16],
    ee_vel: [0, 0],
    contact_force: [0, 0],
    goal_pos: [0.3, 0.0],
    success: false,
    episode_seed: 0,
    ...over,
  };
}

export class FakeSocket implements SocketLike {
  readyState = 0;
  sent: { at: number; raw: string }[] = [];
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;

  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  receive(msg: object): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }

  send(raw: string): void {
    this.sent.push({ at: Date.now(), raw });
  }

  close(): void {
    this.readyState = 3;
    this.onclose?.();
  }

  sentActions(): { dx: number; dy: number }[] {
    return this.sent
      .map((s) => JSON.parse(s.raw))
      .filter((m) => m.type === "action");
  }

  sentOfType(type: string): object[] {
    return this.sent.map((s) => JSON.parse(s.raw)).filter((m) => m.type === type);
  }
}

export interface DrawCall {
  kind: "clear" | "circle" | "rect" | "polyline" | "text";
  tag: string;
  center?: Vec2;
  points?: Vec2[];
  text?: string;
  w?: number;
  h?: number;
  color: string;
}

/** Records every primitive so tests can inspect what a frame contained. */
export class RecordingSurface implements Surface {
  readonly width = 640;
  readonly height = 640;
  calls: DrawCall[] = [];

  clear(color: string): void {
    this.calls.push({ kind: "clear", tag: "clear", color });
  }

  circle(center: Vec2, _radius: number, color: string, tag: string): void {
    this.calls.push({ kind: "circle", tag, center, color });
  }

  rect(x: number, y: number, w: number, h: number, color: string, tag: string): void {
    this.calls.push({ kind: "rect", tag, center: [x, y], w, h, color });
  }

  polyline(points: Vec2[], color: string, tag: string): void {
    this.calls.push({ kind: "polyline", tag, points, color });
  }

  text(s: string, x: number, y: number, color: string, tag: string): void {
    this.calls.push({ kind: "text", tag, center: [x, y], text: s, color });
  }

  tags(): string[] {
    return this.calls.map((c) => c.tag);
  }

  byTag(tag: string): DrawCall[] {
    return this.calls.filter((c) => c.tag === tag);
  }
}
