/**
 * Scene rendering against a minimal draw surface.
 *
 * The renderer takes the session view and a `Surface` rather than a
 * CanvasRenderingContext2D, so headless tests can pass a recording stub
 * and inspect exactly what was drawn. Every primitive carries a tag
 * naming the scene element it belongs to; the partial-observability test
 * asserts that no "object" tag ever appears outside debug sessions.
 */

import type { SessionView } from "./session.js";
import type { Vec2 } from "./protocol.js";

export interface Surface {
  readonly width: number;
  readonly height: number;
  clear(color: string): void;
  circle(center: Vec2, radius: number, color: string, tag: string): void;
  rect(x: number, y: number, w: number, h: number, color: string, tag: string): void;
  polyline(points: Vec2[], color: string, tag: string): void;
  text(s: string, x: number, y: number, color: string, tag: string): void;
}

const COLORS = {
  background: "#10141a",
  workspace: "#2d3748",
  goal: "#2f855a",
  trail: "#4a5568",
  ee: "#63b3ed",
  object: "#ed8936",
  meterFrame: "#2d3748",
  meterFill: "#e53e3e",
  exploration: "#d69e2e",
  task: "#38a169",
  textDim: "#a0aec0",
  banner: "#e53e3e",
};

export const FORCE_METER_FULL_SCALE = 0.02; // force magnitude that fills the bar

/** Map a workspace point to surface pixels (y up in world, down on screen). */
export function worldToScreen(p: Vec2, half: number, s: Surface): Vec2 {
  const size = Math.min(s.width, s.height);
  const scale = size / (2 * half);
  return [s.width / 2 + p[0] * scale, s.height / 2 - p[1] * scale];
}

export function render(view: SessionView, s: Surface): void {
  s.clear(COLORS.background);
  const hello = view.hello;
  if (!hello) {
    s.text("connecting...", 12, 24, COLORS.textDim, "banner");
    return;
  }
  const half = hello.workspace_half;
  const size = Math.min(s.width, s.height);
  const scale = size / (2 * half);

  const [wx, wy] = worldToScreen([-half, half], half, s);
  s.rect(wx, wy, 2 * half * scale, 2 * half * scale, COLORS.workspace, "workspace");

  const state = view.state;
  const goal = state ? state.goal_pos : hello.goal_pos;
  s.circle(worldToScreen(goal, half, s), hello.success_threshold * scale,
    COLORS.goal, "goal");

  if (view.trail.length > 1) {
    s.polyline(view.trail.map((p) => worldToScreen(p, half, s)),
      COLORS.trail, "trail");
  }

  if (state) {
    if (state.obj_pos) {
      // present only when the server runs with the debug reveal flag
      s.circle(worldToScreen(state.obj_pos, half, s), 0.04 * scale,
        COLORS.object, "object");
    }
    s.circle(worldToScreen(state.ee_pos, half, s), hello.ee_radius * scale,
      COLORS.ee, "ee");
    renderForceMeter(state.contact_force, s);
    renderModeBadge(state.mode, s);
    s.text(`step ${state.step}`, 12, s.height - 32, COLORS.textDim, "step-counter");
    if (state.success) {
      s.text("SUCCESS", s.width / 2 - 40, 40, COLORS.task, "success");
    }
  }

  if (view.notice) {
    s.text(view.notice, 12, s.height - 12, COLORS.textDim, "notice");
  }
  if (view.connection !== "open") {
    s.rect(0, 0, s.width, 28, COLORS.banner, "banner");
    s.text("connection lost, reconnecting...", 12, 19, "#ffffff", "banner");
  }
}

function renderForceMeter(force: Vec2, s: Surface): void {
  const mag = Math.hypot(force[0], force[1]);
  const frac = Math.min(1, mag / FORCE_METER_FULL_SCALE);
  const w = 140;
  s.rect(12, 12, w, 14, COLORS.meterFrame, "force-meter-frame");
  if (frac > 0) {
    s.rect(12, 12, w * frac, 14, COLORS.meterFill, "force-meter-fill");
  }
  s.text("force", 12 + w + 8, 24, COLORS.textDim, "force-meter-label");
}

function renderModeBadge(mode: 0 | 1, s: Surface): void {
  const label = mode === 1 ? "TASK" : "EXPLORATION";
  const color = mode === 1 ? COLORS.task : COLORS.exploration;
  s.rect(s.width - 150, 12, 138, 26, color, "mode-badge");
  s.text(label, s.width - 138, 30, "#10141a", "mode-badge");
}
