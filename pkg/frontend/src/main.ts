/**
 * Browser wiring: URL query parameters select the server (host, port, mode),
 * the keyboard/gamepad drive velocity commands, Space is the press-and-hold
 * correction gesture, D toggles demo mode, R resets the episode, I toggles
 * the camera-image stream.
 */

import { TeleopSession, SocketLike } from "./client.js";
import {
  DEFAULT_MAPPING,
  axesToAction,
  combineAxes,
  gamepadAxes,
  keyDown,
  keyUp,
  keyboardAxes,
  newKeyboardState,
} from "./input.js";
import { DEFAULT_VIEW, renderFrame } from "./render.js";

function wrapWebSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onmessage: null,
    onclose: null,
    onopen: null,
  };
  ws.onmessage = (ev) => like.onmessage?.(String(ev.data));
  ws.onclose = () => like.onclose?.();
  ws.onopen = () => like.onopen?.();
  return like;
}

function start(): void {
  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? "127.0.0.1";
  const port = params.get("port") ?? "8765";
  const startMode = params.get("mode") ?? "observe";

  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  canvas.width = DEFAULT_VIEW.width;
  canvas.height = DEFAULT_VIEW.height;
  const ctx = canvas.getContext("2d")!;
  const statusEl = document.getElementById("status")!;
  const imageEl = document.getElementById("camera") as HTMLImageElement;

  const mapping = { ...DEFAULT_MAPPING };
  const session = new TeleopSession(wrapWebSocket(`ws://${host}:${port}`), {
    onFrame: (f) => {
      if (f.bounds) mapping.bounds = f.bounds;
      if (f.image) imageEl.src = `data:image/png;base64,${f.image}`;
    },
    onError: (m) => {
      statusEl.textContent = `server error: ${m}`;
    },
    onStateChange: () => undefined,
  });
  if (startMode === "demo") {
    const arm = setInterval(() => {
      if (session.connection === "open") {
        session.requestDemoMode(true);
        clearInterval(arm);
      }
    }, 100);
  }

  const keys = newKeyboardState();
  window.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    if (ev.code === "Space") session.holdStart();
    else if (ev.code === "KeyD") session.requestDemoMode(session.mode !== "demo");
    else if (ev.code === "KeyR") session.requestReset();
    else if (ev.code === "KeyI") session.requestImageStream(true);
    else keyDown(keys, ev.code);
    ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.code === "Space") session.holdEnd();
    else keyUp(keys, ev.code);
  });

  const loop = () => {
    let axes = keyboardAxes(keys);
    const pads = navigator.getGamepads?.() ?? [];
    const pad = pads.find((p) => p !== null);
    if (pad) axes = combineAxes(axes, gamepadAxes(pad));
    session.pushAction(axesToAction(axes, mapping));

    if (session.latestFrame) {
      renderFrame(ctx, session.latestFrame, DEFAULT_VIEW, session.rewardFlashActive());
    }
    statusEl.textContent =
      `${session.connection} | mode ${session.mode}` +
      (session.holding ? " | CORRECTING (holding)" : "") +
      ` | frames ${session.framesSeen}`;
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

window.addEventListener("DOMContentLoaded", start);
