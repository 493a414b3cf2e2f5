/**
 * Keyboard and pointer state -> protocol messages.
 *
 * Arrow keys (or WASD) command a displacement per tick at the action bound;
 * a pointer drag gives finer magnitudes, scaled so a full drag equals the
 * bound. Space toggles the recorded mode, with a held-key latch so one
 * press emits exactly one toggle. R resets, Enter saves the episode.
 */

import type { ClientMsg, Vec2 } from "./protocol.js";

const LEFT = new Set(["ArrowLeft", "KeyA"]);
const RIGHT = new Set(["ArrowRight", "KeyD"]);
const UP = new Set(["ArrowUp", "KeyW"]);
const DOWN = new Set(["ArrowDown", "KeyS"]);

/** Pixels of pointer drag that command the full action magnitude. */
export const DRAG_FULL_SCALE_PX = 80;

export class InputTracker {
  private held = new Set<string>();
  private drag: Vec2 | null = null;

  /**
   * Register a key press. Returns a discrete message to send right away
   * (mode toggle, reset, save) or null for movement keys, which are
   * sampled continuously via `vector`.
   */
  keydown(code: string): ClientMsg | null {
    const repeat = this.held.has(code);
    this.held.add(code);
    if (repeat) return null; // OS auto-repeat must not re-fire discrete keys
    if (code === "Space") return { type: "toggle_mode" };
    if (code === "KeyR") return { type: "reset" };
    if (code === "Enter") return { type: "save_episode" };
    return null;
  }

  keyup(code: string): void {
    this.held.delete(code);
  }

  /** Pointer drag vector in screen pixels (+x right, +y down). */
  setDrag(dxPx: number, dyPx: number): void {
    this.drag = [dxPx, dyPx];
  }

  clearDrag(): void {
    this.drag = null;
  }

  moving(): boolean {
    if (this.drag) return true;
    for (const code of this.held) {
      if (LEFT.has(code) || RIGHT.has(code) || UP.has(code) || DOWN.has(code)) {
        return true;
      }
    }
    return false;
  }

  /**
   * The displacement to command this tick, clipped per axis to aMax the
   * same way the server clips. Screen-space drags flip y so that up on
   * the screen is +y in the workspace.
   */
  vector(aMax: number): Vec2 {
    let dx = 0;
    let dy = 0;
    for (const code of this.held) {
      if (LEFT.has(code)) dx -= 1;
      if (RIGHT.has(code)) dx += 1;
      if (UP.has(code)) dy += 1;
      if (DOWN.has(code)) dy -= 1;
    }
    if (dx !== 0 || dy !== 0) {
      return [clip(dx * aMax, aMax), clip(dy * aMax, aMax)];
    }
    if (this.drag) {
      const gain = aMax / DRAG_FULL_SCALE_PX;
      return [clip(this.drag[0] * gain, aMax), clip(-this.drag[1] * gain, aMax)];
    }
    return [0, 0];
  }
}

function clip(v: number, bound: number): number {
  return Math.max(-bound, Math.min(bound, v));
}
