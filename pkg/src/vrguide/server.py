"""Newline-delimited JSON service over TCP for one interactive client.

The session loop is the sole mutator: a reader thread only enqueues raw
lines, and the loop consumes them at tick boundaries, steps the simulation,
and writes event/snapshot frames back. Disconnect or Quit tears the session
down and flushes the transcript.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time

from .audio import attenuate
from .session import SessionConfig, create_session, parse_command
from .transcript import (ACTION, ERROR, EVENT, GUIDE_RESPONSE,
                         PERSONA_CHANGED, canonical_value)

FRAME_QUEUE_SIZE = 256


def _frame_bytes(frame: dict) -> bytes:
    return (json.dumps(canonical_value(frame), sort_keys=True,
                       separators=(",", ":")) + "\n").encode("utf-8")


def scene_frame(scene) -> dict:
    grid = scene.grid
    return {
        "type": "hello",
        "scene": {
            "name": scene.name,
            "grid": {
                "origin": grid.origin.as_list(),
                "cell_size": grid.cell_size,
                "width": grid.width,
                "height": grid.height,
                "blocked": sorted([col, row] for col, row in grid.blocked),
            },
            "spawn": {"position": scene.spawn.position.as_list(),
                      "yaw": scene.spawn.yaw},
            "objects": [{
                "id": o.id, "display_name": o.display_name,
                "description": o.description, "color": o.color_tag,
                "shape": o.shape_tag, "radius": o.radius,
                "position": o.position.as_list(),
                "anchor": o.anchor.as_list(),
            } for o in scene.objects],
        },
    }


def snapshot_frame(session) -> dict:
    return {
        "type": "snapshot",
        "t": session.clock,
        "user": {"pos": session.user.position.as_list(),
                 "yaw": session.user.yaw},
        "guide": {"pos": session.guide.position.as_list(),
                  "yaw": session.guide.yaw,
                  "state": session.guide_state.kind,
                  "target": session.guide_state.target,
                  "persona": session.persona.id,
                  "visible": session.persona.visible},
        "beacons": [{"object_id": b.object_id,
                     "expires_at": b.expires_at}
                    for b in session.beacons.active()],
        "objects": [{"id": o.id, "pos": o.position.as_list()}
                    for o in session.scene.objects],
        "query_pending": session.query_pending,
    }


class GuideServer:
    """Serves exactly one client over a single duplex socket."""

    def __init__(self, scene, persona_id: str = "human", backend=None,
                 config: SessionConfig | None = None, seed: int = 0,
                 host: str = "127.0.0.1", port: int = 0,
                 speedup: float = 1.0, max_ticks: int | None = None,
                 transcript_out=None):
        self.scene = scene
        self.persona_id = persona_id
        self.backend = backend
        self.config = config if config is not None else SessionConfig()
        self.seed = seed
        self.host = host
        self.port = port
        self.speedup = speedup
        self.max_ticks = max_ticks
        self.transcript_out = transcript_out
        self.session = None
        self._listener: socket.socket | None = None
        self._stop = threading.Event()

    def start(self) -> int:
        """Bind and listen; returns the bound port."""
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(1)
        self._listener = listener
        self.port = listener.getsockname()[1]
        return self.port

    def stop(self):
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass

    def serve_forever(self):
        """Accept one client and run its session to completion."""
        if self._listener is None:
            self.start()
        try:
            self._listener.settimeout(0.2)
            conn = None
            while not self._stop.is_set():
                try:
                    conn, _ = self._listener.accept()
                    break
                except socket.timeout:
                    continue
                except OSError:
                    return
            if conn is None:
                return
            with conn:
                conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._run_client(conn)
        finally:
            self.stop()

    # --- client loop ---------------------------------------------------------

    def _run_client(self, conn: socket.socket):
        lines: queue.Queue = queue.Queue(maxsize=FRAME_QUEUE_SIZE)
        reader = threading.Thread(target=_read_lines, args=(conn, lines),
                                  daemon=True)
        reader.start()

        self.session = create_session(self.scene, persona_id=self.persona_id,
                                      backend=self.backend,
                                      config=self.config, seed=self.seed)
        session = self.session
        reason = "disconnect"
        try:
            self._send(conn, scene_frame(self.scene))
            self._send(conn, snapshot_frame(session))
            while not self._stop.is_set():
                if self.max_ticks is not None and session.ticks >= self.max_ticks:
                    reason = "quit"
                    session.finish("quit")
                commands, disconnected = self._drain_commands(conn, lines)
                if session.closed:
                    self._send(conn, {"type": "bye",
                                      "reason": session.transcript.entries[-1]
                                      .payload["reason"]})
                    return
                if disconnected:
                    session.finish("disconnect")
                    return
                entries = session.step(commands)
                self._send_step_frames(conn, session, entries)
                if session.closed:
                    self._send(conn, {"type": "bye", "reason": "quit"})
                    return
                if self.speedup > 0:
                    time.sleep(session.config.dt / self.speedup)
        except OSError:
            reason = "disconnect"
        finally:
            if not session.closed:
                session.finish(reason)
            if self.transcript_out is not None:
                session.transcript.save(self.transcript_out)

    def _drain_commands(self, conn, lines):
        commands = []
        disconnected = False
        while True:
            try:
                item = lines.get_nowait()
            except queue.Empty:
                break
            if item is None:
                disconnected = True
                break
            try:
                frame = json.loads(item)
                if not isinstance(frame, dict) or frame.get("type") != "cmd":
                    raise ValueError("expected a {type:'cmd', cmd:{...}} frame")
                commands.append(parse_command(frame.get("cmd")))
            except (ValueError, TypeError) as exc:
                self._send(conn, {"type": "error",
                                  "error": {"code": "malformed_frame",
                                            "message": str(exc)}})
        return commands, disconnected

    def _send_step_frames(self, conn, session, entries):
        for event in session.drain_events():
            spatial = attenuate(event, session.user,
                                max_range=session.config.audio_max_range)
            payload = event.as_payload()
            payload["gain"] = spatial.gain
            payload["pan"] = spatial.pan
            self._send(conn, {"type": "event", "event": payload})
        for entry in entries:
            if entry.kind == GUIDE_RESPONSE:
                self._send(conn, {"type": "event", "event": {
                    "kind": "guide_response", "t": entry.t,
                    **entry.payload}})
            elif entry.kind == PERSONA_CHANGED:
                self._send(conn, {"type": "event", "event": {
                    "kind": "persona_changed", "t": entry.t,
                    **entry.payload}})
            elif entry.kind == ACTION:
                self._send(conn, {"type": "event", "event": {
                    "kind": "action", "t": entry.t, **entry.payload}})
            elif entry.kind == ERROR:
                self._send(conn, {"type": "error", "t": entry.t,
                                  "error": entry.payload})
        self._send(conn, snapshot_frame(session))

    def _send(self, conn, frame: dict):
        conn.sendall(_frame_bytes(frame))


def _read_lines(conn: socket.socket, lines: queue.Queue):
    buffer = b""
    try:
        while True:
            data = conn.recv(4096)
            if not data:
                break
            buffer += data
            while b"\n" in buffer:
                line, buffer = buffer.split(b"\n", 1)
                if line.strip():
                    lines.put(line.decode("utf-8", "replace"))
    except OSError:
        pass
    lines.put(None)


def serve(scene, persona_id: str = "human", backend=None,
          config: SessionConfig | None = None, seed: int = 0,
          host: str = "127.0.0.1", port: int = 0, speedup: float = 1.0,
          max_ticks: int | None = None, transcript_out=None,
          announce=None) -> GuideServer:
    server = GuideServer(scene, persona_id=persona_id, backend=backend,
                         config=config, seed=seed, host=host, port=port,
                         speedup=speedup, max_ticks=max_ticks,
                         transcript_out=transcript_out)
    bound = server.start()
    if announce is not None:
        announce(bound)
    server.serve_forever()
    return server
