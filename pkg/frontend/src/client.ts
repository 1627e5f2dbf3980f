/**
 * Teleoperation session state machine.
 *
 * Owns a socket-like transport, tracks the latest frame (latest wins; the
 * renderer reads at its own pace), drives the override lifecycle from a
 * press-and-hold gesture, and throttles outgoing commands to the server's
 * control rate. Never fabricates display state: everything rendered comes
 * from server messages.
 */

import {
  ClientMsg,
  EpisodeEndMsg,
  FrameMsg,
  Mode,
  ServerMsg,
  encodeClientMsg,
  parseServerMsg,
} from "./protocol.js";
import { Vec3 } from "./input.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((data: string) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export type ConnectionState = "connecting" | "open" | "closed";
export type UiMode = "observe" | "demo" | "correcting";

const CONTROL_PERIOD_MS = 50; // never send faster than the 20 Hz control rate

export interface SessionEvents {
  onFrame?: (frame: FrameMsg) => void;
  onEpisodeEnd?: (msg: EpisodeEndMsg) => void;
  onError?: (message: string) => void;
  onStateChange?: () => void;
}

export class TeleopSession {
  connection: ConnectionState = "connecting";
  mode: UiMode = "observe";
  overrideAcked = false;
  latestFrame: FrameMsg | null = null;
  lastSuccessAt: number | null = null; // ms timestamp for the reward flash
  framesSeen = 0;
  staleTicks = 0;

  private socket: SocketLike;
  private events: SessionEvents;
  private holdActive = false;
  private lastSendAt = -Infinity;
  private now: () => number;

  constructor(socket: SocketLike, events: SessionEvents = {}, now: () => number = () => Date.now()) {
    this.socket = socket;
    this.events = events;
    this.now = now;
    socket.onopen = () => {
      this.connection = "open";
      this.events.onStateChange?.();
    };
    socket.onmessage = (data) => this.handleMessage(data);
    socket.onclose = () => {
      this.connection = "closed";
      // the server auto-releases a dropped override; mirror that locally
      this.holdActive = false;
      this.overrideAcked = false;
      if (this.mode === "correcting") this.mode = "observe";
      this.events.onStateChange?.();
    };
  }

  private handleMessage(data: string): void {
    const msg: ServerMsg | null = parseServerMsg(data);
    if (msg === null) return; // never render fabricated or broken frames
    switch (msg.type) {
      case "frame":
        if (this.latestFrame && msg.episode_id === this.latestFrame.episode_id && msg.tick < this.latestFrame.tick) {
          this.staleTicks += 1;
          return; // display tick must be monotone within an episode
        }
        this.latestFrame = msg;
        this.framesSeen += 1;
        this.events.onFrame?.(msg);
        break;
      case "episode_end":
        if (msg.success) this.lastSuccessAt = this.now();
        this.events.onEpisodeEnd?.(msg);
        break;
      case "mode":
        if (msg.mode === "demo") this.mode = "demo";
        else if (this.mode === "demo") this.mode = "observe";
        this.events.onStateChange?.();
        break;
      case "override":
        this.overrideAcked = msg.active;
        this.mode = msg.active ? "correcting" : this.mode === "correcting" ? "observe" : this.mode;
        this.events.onStateChange?.();
        break;
      case "error":
        this.events.onError?.(msg.message);
        break;
    }
  }

  private sendMsg(msg: ClientMsg): void {
    if (this.connection !== "open") return;
    this.socket.send(encodeClientMsg(msg));
  }

  /** Reward indicator stays visible for at least this long. */
  rewardFlashActive(holdMs = 500): boolean {
    return this.lastSuccessAt !== null && this.now() - this.lastSuccessAt < holdMs;
  }

  requestDemoMode(on: boolean): void {
    this.sendMsg({ type: "mode", mode: on ? "demo" : "observe" });
  }

  requestReset(): void {
    this.sendMsg({ type: "reset" });
  }

  requestImageStream(on: boolean): void {
    this.sendMsg({ type: "image_stream", on });
  }

  /** Press-and-hold gesture edge: engage the override. */
  holdStart(): void {
    if (this.holdActive || this.mode === "demo") return;
    this.holdActive = true;
    this.sendMsg({ type: "override_start" });
  }

  /** Gesture release edge: let the policy back in. */
  holdEnd(): void {
    if (!this.holdActive) return;
    this.holdActive = false;
    this.sendMsg({ type: "override_end" });
  }

  get holding(): boolean {
    return this.holdActive;
  }

  /**
   * Called at the UI tick rate with the current mapped velocity command.
   * Commands go out only in demo mode or while correcting, throttled to the
   * server control rate.
   */
  pushAction(v: Vec3): void {
    const commanding = this.mode === "demo" || this.holdActive;
    if (!commanding) return;
    const t = this.now();
    if (t - this.lastSendAt < CONTROL_PERIOD_MS) return;
    this.lastSendAt = t;
    this.sendMsg({ type: "action", v });
  }

  close(): void {
    this.socket.close();
  }
}
