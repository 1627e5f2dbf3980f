/**
 * Wire protocol shared with the training service: JSON messages over a
 * persistent WebSocket. All numeric units are SI.
 */

export type Mode = "observe" | "demo" | "correcting";

export interface FrameMsg {
  type: "frame";
  tick: number;
  episode_id: number;
  mode: Mode;
  rel_pose: [number, number, number] | null;
  twist: [number, number, number];
  wrench: [number, number, number];
  image?: string; // base64 PNG, only when subscribed and vision is active
  bounds?: [number, number, number];
}

export interface EpisodeEndMsg {
  type: "episode_end";
  episode_id: number;
  success: boolean;
}

export interface ModeAckMsg {
  type: "mode";
  mode: "observe" | "demo";
}

export interface OverrideAckMsg {
  type: "override";
  active: boolean;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = FrameMsg | EpisodeEndMsg | ModeAckMsg | OverrideAckMsg | ErrorMsg;

export interface ActionMsg {
  type: "action";
  v: [number, number, number];
}

export type ClientMsg =
  | ActionMsg
  | { type: "override_start" }
  | { type: "override_end" }
  | { type: "reset" }
  | { type: "mode"; mode: "observe" | "demo" }
  | { type: "image_stream"; on: boolean };

function isVec3(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every((x) => typeof x === "number" && Number.isFinite(x));
}

/** Parse and validate one server message; null for anything malformed. */
export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null || !("type" in data)) return null;
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "frame":
      if (
        typeof msg.tick === "number" &&
        typeof msg.episode_id === "number" &&
        (msg.rel_pose === null || isVec3(msg.rel_pose)) &&
        isVec3(msg.twist) &&
        isVec3(msg.wrench)
      ) {
        return msg as unknown as FrameMsg;
      }
      return null;
    case "episode_end":
      return typeof msg.success === "boolean" ? (msg as unknown as EpisodeEndMsg) : null;
    case "mode":
      return msg.mode === "observe" || msg.mode === "demo" ? (msg as unknown as ModeAckMsg) : null;
    case "override":
      return typeof msg.active === "boolean" ? (msg as unknown as OverrideAckMsg) : null;
    case "error":
      return typeof msg.message === "string" ? (msg as unknown as ErrorMsg) : null;
    default:
      return null;
  }
}

export function encodeClientMsg(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
