"""Teleoperation wire service: live state streaming plus human override.

JSON messages over a persistent WebSocket (one client per session):

  server -> client
    {"type":"frame", "tick", "episode_id", "mode", "rel_pose":[x,y,th]|null,
     "twist":[vx,vy,wth], "wrench":[fx,fy,tau], "image"?: base64 PNG,
     "reward"?, "done"?}
    {"type":"episode_end", "episode_id", "success"}
    {"type":"mode", "mode"}            acknowledgment of a mode change
    {"type":"override", "active"}      acknowledgment of start/end
    {"type":"error", "message"}        malformed input; session is preserved
  client -> server
    {"type":"action", "v":[vx,vy,wth]}
    {"type":"override_start"} / {"type":"override_end"}
    {"type":"reset"}
    {"type":"mode", "mode":"observe"|"demo"}
    {"type":"image_stream", "on": true|false}

All numeric units SI. The training loop polls this service once per control
tick and never blocks on it: frames go through a latest-wins slot drained by
a sender thread, and a missing client is simply the no-override case.
Client disconnect releases any active override immediately, so the very next
control tick acts on the agent's own action.
"""

from __future__ import annotations

import base64
import io
import json
import queue
import threading
from dataclasses import dataclass

import numpy as np
from websockets.sync.server import serve as ws_serve

MODES = ("observe", "demo")


@dataclass(frozen=True)
class TeleopTick:
    action: np.ndarray | None
    mode: str  # observe | demo | correcting
    reset_requested: bool


def encode_image_png(img: np.ndarray) -> str:
    """Grayscale [0,1] float image -> base64 PNG string."""
    from PIL import Image

    arr = np.clip(np.asarray(img) * 255.0, 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class TeleopService:
    """Single-client WebSocket teleop endpoint.

    Thread layout: one accept/server thread (websockets), one handler thread
    per connection (reads client messages), one sender thread (writes frames
    and control messages). The trainer thread only touches lock-protected
    scalars in tick().
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._lock = threading.Lock()
        self._client = None
        self._send_lock = threading.Lock()
        self._mode = "observe"
        self._override_active = False
        self._latest_action: np.ndarray | None = None
        self._reset_requested = False
        self._image_stream = False
        self._frame_slot: queue.Queue = queue.Queue(maxsize=2)
        self._control_out: queue.Queue = queue.Queue()
        self._stop = threading.Event()

        self._server = ws_serve(self._handler, host, port)
        self._server_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._server_thread.start()
        self._sender_thread = threading.Thread(target=self._sender_loop, daemon=True)
        self._sender_thread.start()

    @property
    def address(self) -> tuple[str, int]:
        sock = self._server.socket if hasattr(self._server, "socket") else self._server.sockets[0]
        return sock.getsockname()[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"ws://{host}:{port}"

    def close(self) -> None:
        self._stop.set()
        with self._lock:
            client = self._client
        if client is not None:
            try:
                client.close()
            except OSError:
                pass
        self._server.shutdown()
        self._server_thread.join(timeout=5.0)
        self._sender_thread.join(timeout=5.0)

    # --- connection handling -------------------------------------------------

    def _handler(self, websocket) -> None:
        with self._lock:
            if self._client is not None:
                websocket.close(code=1013, reason="session busy")
                return
            self._client = websocket
        try:
            for raw in websocket:
                self._on_message(raw)
        except Exception:
            pass
        finally:
            with self._lock:
                if self._client is websocket:
                    self._client = None
                # a vanished client must not keep control of the robot
                self._override_active = False
                self._latest_action = None
                self._mode = "observe"

    def _on_message(self, raw) -> None:
        try:
            msg = json.loads(raw)
            mtype = msg["type"]
        except (ValueError, TypeError, KeyError):
            self._send_control({"type": "error", "message": "malformed message"})
            return
        if mtype == "action":
            try:
                v = [float(x) for x in msg["v"]]
                if len(v) != 3 or not all(np.isfinite(v)):
                    raise ValueError
            except (ValueError, TypeError, KeyError):
                self._send_control({"type": "error", "message": "action needs 3 finite velocities"})
                return
            with self._lock:
                self._latest_action = np.array(v)
        elif mtype == "override_start":
            with self._lock:
                self._override_active = True
                self._latest_action = None
            self._send_control({"type": "override", "active": True})
        elif mtype == "override_end":
            with self._lock:
                self._override_active = False
                self._latest_action = None
            self._send_control({"type": "override", "active": False})
        elif mtype == "reset":
            with self._lock:
                self._reset_requested = True
        elif mtype == "mode":
            mode = msg.get("mode")
            if mode not in MODES:
                self._send_control({"type": "error", "message": f"unknown mode {mode!r}"})
                return
            with self._lock:
                self._mode = mode
                self._latest_action = None
            self._send_control({"type": "mode", "mode": mode})
        elif mtype == "image_stream":
            with self._lock:
                self._image_stream = bool(msg.get("on"))
        else:
            self._send_control({"type": "error", "message": f"unknown type {mtype!r}"})

    # --- outgoing -------------------------------------------------------------

    def _sender_loop(self) -> None:
        while not self._stop.is_set():
            try:
                kind, payload = self._control_out.get(timeout=0.005)
            except queue.Empty:
                try:
                    kind, payload = "frame", self._frame_slot.get_nowait()
                except queue.Empty:
                    continue
            with self._lock:
                client = self._client
            if client is None:
                continue
            try:
                with self._send_lock:
                    client.send(json.dumps(payload))
            except Exception:
                pass

    def _send_control(self, payload: dict) -> None:
        self._control_out.put(("control", payload))

    def publish_frame(self, frame: dict) -> None:
        """Queue a frame, dropping the oldest if the client is slow."""
        try:
            self._frame_slot.put_nowait(frame)
        except queue.Full:
            try:
                self._frame_slot.get_nowait()
            except queue.Empty:
                pass
            try:
                self._frame_slot.put_nowait(frame)
            except queue.Full:
                pass

    # --- trainer-side interface -----------------------------------------------

    def wants_image(self) -> bool:
        with self._lock:
            return self._image_stream

    def has_client(self) -> bool:
        with self._lock:
            return self._client is not None

    def poll(self) -> TeleopTick:
        """Report the client's current wishes without publishing anything."""
        with self._lock:
            mode = self._mode
            override = self._override_active
            action = None if self._latest_action is None else self._latest_action.copy()
            reset_requested = self._reset_requested
            self._reset_requested = False
        if mode == "demo":
            return TeleopTick(action=action, mode="demo", reset_requested=reset_requested)
        if override:
            return TeleopTick(action=action, mode="correcting", reset_requested=reset_requested)
        return TeleopTick(action=None, mode="observe", reset_requested=reset_requested)

    def tick(self, frame: dict, effective_mode: str | None = None) -> TeleopTick:
        """Publish one state frame and report the client's current wishes.

        `effective_mode` is what the session will actually do with an action
        this tick (demo mode latches per episode); without it the frame
        carries the raw service state.
        """
        wishes = self.poll()
        frame = dict(frame)
        frame["mode"] = effective_mode if effective_mode is not None else wishes.mode
        self.publish_frame(frame)
        return wishes

    def episode_finished(self, episode_id: int, success: bool) -> None:
        self._send_control({"type": "episode_end", "episode_id": episode_id, "success": bool(success)})
