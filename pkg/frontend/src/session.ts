/**
 * Client-side session state: a pure reducer over server messages.
 *
 * Everything the renderer shows lives in this view, and every field of the
 * view is copied out of a server message; the client never reconstructs
 * ground truth on its own. Keeping the reducer pure makes the
 * "replay a captured wire log offline" test trivial.
 */

import type { HelloMsg, ServerMsg, StateMsg, Vec2 } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface SessionView {
  connection: ConnectionStatus;
  hello: HelloMsg | null;
  state: StateMsg | null;
  /** Recent end-effector positions, oldest first. */
  trail: Vec2[];
  /** Status line from the latest mode/saved/reset/error reply. */
  notice: string;
  savedCount: number | null;
}

export const TRAIL_LENGTH = 120;

export function emptyView(): SessionView {
  return {
    connection: "connecting",
    hello: null,
    state: null,
    trail: [],
    notice: "",
    savedCount: null,
  };
}

export function applyServerMsg(view: SessionView, msg: ServerMsg): SessionView {
  switch (msg.type) {
    case "hello":
      return { ...view, hello: msg, trail: [], state: null };
    case "state": {
      const trail = [...view.trail, msg.ee_pos];
      if (trail.length > TRAIL_LENGTH) trail.splice(0, trail.length - TRAIL_LENGTH);
      return { ...view, state: msg, trail };
    }
    case "mode":
      return {
        ...view,
        notice: msg.mode === 1 ? "switched to TASK" : "switched to EXPLORATION",
        state: view.state ? { ...view.state, mode: msg.mode } : view.state,
      };
    case "reset_done":
      return {
        ...view,
        trail: [],
        state: null,
        savedCount: view.savedCount,
        notice: `reset, episode seed ${msg.episode_seed}`,
      };
    case "saved":
      return {
        ...view,
        savedCount: msg.count,
        notice: `saved episode #${msg.count}${view.state?.success ? " (success)" : ""}`,
      };
    case "error":
      return { ...view, notice: `server error: ${msg.message}` };
  }
}

export function setConnection(
  view: SessionView,
  connection: ConnectionStatus,
): SessionView {
  return { ...view, connection };
}
