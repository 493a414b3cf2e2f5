/**
 * Wire protocol for the teleoperation backend.
 *
 * The server speaks JSON over one WebSocket: a `hello` on connect, then a
 * `state` snapshot per tick. State frames carry only what the robot itself
 * can sense; the hidden object position appears only when the server was
 * started in debug-reveal mode.
 */

export type Vec2 = [number, number];

export interface HelloMsg {
  type: "hello";
  tick_hz: number;
  a_max: number;
  goal_pos: Vec2;
  success_threshold: number;
  workspace_half: number;
  ee_radius: number;
  debug_reveal: boolean;
}

export interface StateMsg {
  type: "state";
  step: number;
  mode: 0 | 1;
  ee_pos: Vec2;
  ee_vel: Vec2;
  contact_force: Vec2;
  goal_pos: Vec2;
  success: boolean;
  episode_seed: number;
  obj_pos?: Vec2; // debug sessions only
}

export interface ModeMsg {
  type: "mode";
  mode: 0 | 1;
}

export interface ResetDoneMsg {
  type: "reset_done";
  episode_seed: number;
}

export interface SavedMsg {
  type: "saved";
  count: number;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg =
  | HelloMsg
  | StateMsg
  | ModeMsg
  | ResetDoneMsg
  | SavedMsg
  | ErrorMsg;

export interface ActionMsg {
  type: "action";
  dx: number;
  dy: number;
}

export interface ToggleModeMsg {
  type: "toggle_mode";
}

export interface ResetMsg {
  type: "reset";
  seed?: number;
}

export interface SaveEpisodeMsg {
  type: "save_episode";
}

export type ClientMsg = ActionMsg | ToggleModeMsg | ResetMsg | SaveEpisodeMsg;

const SERVER_TYPES = new Set([
  "hello",
  "state",
  "mode",
  "reset_done",
  "saved",
  "error",
]);

/** Parse one inbound frame; returns null for anything malformed. */
export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return data as ServerMsg;
}
