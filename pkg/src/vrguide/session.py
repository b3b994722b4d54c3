"""One user, one guide, one scene: the fixed-step session engine.

The session owns the simulation clock and is the sole mutator of state.
Commands are applied at tick boundaries, every observable happening lands in
the transcript in order, and — with a deterministic backend — the transcript
bytes are a pure function of (scene, script, persona, config, seed).
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, replace

from . import agent
from .agent import (GUIDE_SPEED, GuideCommand, GuideState, FOLLOWING_STATE)
from .audio import (AudioEvent, BeaconRegistry, DEFAULT_BEACON_DURATION,
                    DEFAULT_PING_INTERVAL, MovementCueState, PROCESSING,
                    RESPONSE_READY, STRIDE_LENGTH, TELEPORT as TELEPORT_EVENT,
                    movement_cues)
from .errors import (EmptyQuery, GuideError, InvalidEndpoint, QueryInFlight,
                     UnknownPersona)
from .intent import (ADD_BEACON, CLARIFY_BUSY, GO_TO, RuleBackend,
                     RuleGrounding, build_prompt_bundle, extract_action,
                     refresh_due)
from .pathfinding import follow_anchor
from .personas import Persona, get_persona, persona_registry
from .scene import (DEFAULT_FOV_DEG, DEFAULT_MAX_RANGE, Pose, Scene, Vec3,
                    birds_eye_view, first_person_view)
from .transcript import (ACTION, ERROR, EVENT, GUIDE_RESPONSE,
                         PERSONA_CHANGED, SESSION_END, SESSION_START,
                         Transcript, USER_QUERY)

DEFAULT_DT = 1.0 / 30.0


# --- commands ------------------------------------------------------------------

@dataclass(frozen=True)
class Move:
    forward: float = 0.0
    strafe: float = 0.0


@dataclass(frozen=True)
class TurnBy:
    radians: float


@dataclass(frozen=True)
class TeleportSelf:
    position: Vec3


@dataclass(frozen=True)
class Query:
    text: str


@dataclass(frozen=True)
class Grab:
    pass


@dataclass(frozen=True)
class Release:
    pass


@dataclass(frozen=True)
class SwitchPersona:
    persona_id: str


@dataclass(frozen=True)
class Quit:
    pass


def parse_command(frame: dict):
    """Wire-frame dict -> command object. Raises ValueError on bad frames."""
    if not isinstance(frame, dict) or "kind" not in frame:
        raise ValueError("command frame needs a 'kind'")
    kind = frame["kind"]
    try:
        if kind == "move":
            return Move(forward=float(frame.get("forward", 0.0)),
                        strafe=float(frame.get("strafe", 0.0)))
        if kind == "turn_by":
            return TurnBy(radians=float(frame["radians"]))
        if kind == "teleport_self":
            x, y, z = (float(v) for v in frame["position"])
            return TeleportSelf(position=Vec3(x, y, z))
        if kind == "query":
            return Query(text=str(frame["text"]))
        if kind == "grab":
            return Grab()
        if kind == "release":
            return Release()
        if kind == "switch_persona":
            return SwitchPersona(persona_id=str(frame["persona"]))
        if kind == "quit":
            return Quit()
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed {kind!r} command: {exc}") from exc
    raise ValueError(f"unknown command kind {kind!r}")


# --- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class SessionConfig:
    fov_deg: float = DEFAULT_FOV_DEG
    max_range: float = DEFAULT_MAX_RANGE
    guide_speed: float = GUIDE_SPEED
    stride: float = STRIDE_LENGTH
    beacon_duration: float = DEFAULT_BEACON_DURATION
    ping_interval: float = DEFAULT_PING_INTERVAL
    audio_max_range: float = DEFAULT_MAX_RANGE
    dt: float = DEFAULT_DT


_BECOME = re.compile(r"\bbecome (?:the |a |an |my )?(?P<name>[a-z_ ]+?)[\s.!?]*$")


class Session:
    """Sole owner and mutator of one simulated guide session."""

    def __init__(self, scene: Scene, persona: Persona, backend,
                 config: SessionConfig, seed: int,
                 extra_personas: tuple[Persona, ...] = ()):
        self.scene = scene
        self.persona = persona
        self.backend = backend
        self.config = config
        self.seed = seed
        self.registry = persona_registry(extra_personas)

        self.user: Pose = scene.spawn
        self.guide: Pose = Pose(
            position=follow_anchor(scene.spawn, persona.placement),
            yaw=scene.spawn.yaw)
        self.guide_state: GuideState = FOLLOWING_STATE
        self.beacons = BeaconRegistry()
        self.transcript = Transcript()

        self._ticks = 0
        self._closed = False
        self._guide_footstep_accum = 0.0
        self._user_cues = MovementCueState()
        self._suppress_user_cues = False
        self._event_buffer: list[AudioEvent] = []
        self._step_entries: list = []
        self._pending: dict | None = None
        self._pending_lock = threading.Lock()

        self.capture_times: list[float] = []
        self.views = None
        self._capture_views()

        self._append(SESSION_START, {
            "scene": scene.name, "persona": persona.id, "seed": seed,
            "backend": getattr(backend, "name", "unknown"),
            "dt": config.dt, "fov_deg": config.fov_deg,
            "max_range": config.max_range})

    # --- clock and bookkeeping ---------------------------------------------

    @property
    def clock(self) -> float:
        return self._ticks * self.config.dt

    @property
    def ticks(self) -> int:
        return self._ticks

    @property
    def closed(self) -> bool:
        return self._closed

    def _append(self, kind: str, payload: dict, t: float | None = None):
        entry = self.transcript.add(self.clock if t is None else t, kind,
                                    payload)
        self._step_entries.append(entry)
        return entry

    def _emit(self, event: AudioEvent):
        self._event_buffer.append(event)
        self._append(EVENT, event.as_payload(), t=event.t)

    def drain_events(self) -> list[AudioEvent]:
        out = list(self._event_buffer)
        self._event_buffer.clear()
        return out

    def _capture_views(self):
        now = self.clock
        self.views = (
            first_person_view(self.scene, self.user, fov=self.config.fov_deg,
                              max_range=self.config.max_range, now=now),
            birds_eye_view(self.scene, now=now),
        )
        self.capture_times.append(now)

    # --- stepping -----------------------------------------------------------

    def step(self, commands=(), dt: float | None = None) -> list:
        """Advance one fixed tick: commands, guide, beacons, context refresh.

        Returns the transcript entries appended during this step. Command
        failures become Error entries; the step itself never aborts.
        """
        if self._closed:
            raise RuntimeError("session is closed")
        dt = self.config.dt if dt is None else dt
        if dt <= 0:
            raise ValueError("dt must be positive")
        self._step_entries = []
        self._suppress_user_cues = False
        user_before = self.user

        self._drain_pending_response()

        for command in commands:
            self._apply_command(command, dt)
            if self._closed:
                return list(self._step_entries)

        t_end = self.clock + dt
        self._tick_guide(dt, t_end)
        self._tick_user_cues(user_before, t_end)
        for event in self.beacons.tick(self.scene, self.clock, t_end):
            self._emit(event)
        self._ticks += 1

        if refresh_due(self.clock, self.capture_times[-1]):
            self._capture_views()
        return list(self._step_entries)

    def _tick_guide(self, dt: float, t_end: float):
        output = agent.tick(self.guide_state, self.scene, self.user,
                            self.guide, self.persona, dt,
                            speed=self.config.guide_speed, now=t_end,
                            footstep_accum=self._guide_footstep_accum,
                            stride=self.config.stride)
        self.guide_state = output.state
        self.guide = output.guide
        self.user = output.user
        self._guide_footstep_accum = output.footstep_accum
        for event in output.events:
            self._emit(event)

    def _tick_user_cues(self, user_before: Pose, t_end: float):
        if self._suppress_user_cues:
            self._user_cues = MovementCueState()
            return
        events, self._user_cues = movement_cues(
            user_before, self.user, self._user_cues, now=t_end,
            stride=self.config.stride)
        for event in events:
            self._emit(event)

    # --- command application --------------------------------------------------

    def _apply_command(self, command, dt: float):
        if isinstance(command, Move):
            self._apply_move(command, dt)
        elif isinstance(command, TurnBy):
            if not self.guide_state.grabbed:
                self.user = replace(self.user, yaw=self.user.yaw + command.radians)
        elif isinstance(command, TeleportSelf):
            self._apply_teleport_self(command)
        elif isinstance(command, Query):
            self.process_query(command.text)
        elif isinstance(command, Grab):
            self._apply_grab()
        elif isinstance(command, Release):
            output = agent.apply_command(
                self.guide_state, GuideCommand(kind=agent.RELEASE), self.scene,
                self.user, self.guide, now=self.clock,
                footstep_accum=self._guide_footstep_accum)
            self._absorb(output)
        elif isinstance(command, SwitchPersona):
            self.switch_persona(command.persona_id)
        elif isinstance(command, Quit):
            self.finish("quit")
        else:
            raise ValueError(f"unknown command {command!r}")

    def _apply_move(self, command: Move, dt: float):
        if self.guide_state.grabbed:
            return  # the guide steers while escorting
        fwd = self.user.forward()
        right = self.user.right()
        target = Vec3(
            self.user.position.x + (fwd.x * command.forward
                                    + right.x * command.strafe) * dt,
            self.user.position.y,
            self.user.position.z + (fwd.z * command.forward
                                    + right.z * command.strafe) * dt)
        if self.scene.grid.point_walkable(target):
            self.user = replace(self.user, position=target)

    def _apply_teleport_self(self, command: TeleportSelf):
        if self.guide_state.grabbed:
            return
        if not self.scene.grid.point_walkable(command.position):
            self._append(ERROR, InvalidEndpoint(
                "teleport destination is blocked or out of bounds").payload())
            return
        self.user = replace(self.user, position=command.position)
        self._suppress_user_cues = True
        self._emit(AudioEvent(kind=TELEPORT_EVENT, t=self.clock,
                              source=command.position))

    def _apply_grab(self):
        output = agent.apply_command(
            self.guide_state, GuideCommand(kind=agent.GRAB), self.scene,
            self.user, self.guide, now=self.clock,
            footstep_accum=self._guide_footstep_accum)
        if any(e.kind == TELEPORT_EVENT for e in output.events):
            self._suppress_user_cues = True
        self._absorb(output)

    def _absorb(self, output, record_error: bool = True):
        self.guide_state = output.state
        self.guide = output.guide
        self.user = output.user
        self._guide_footstep_accum = output.footstep_accum
        for event in output.events:
            self._emit(event)
        if record_error and output.error is not None:
            self._append(ERROR, output.error.payload())

    # --- queries ----------------------------------------------------------------

    def process_query(self, text: str):
        """Run one query turn: transcript the query, play the processing cue,
        complete against the backend, surface the reply, dispatch any action.

        Exactly one GuideResponse or one Error entry follows every UserQuery.
        """
        self._append(USER_QUERY, {"text": text})
        if self._pending is not None:
            self._append(ERROR, QueryInFlight(
                "a query is already being answered").payload())
            return
        self._emit(AudioEvent(kind=PROCESSING, t=self.clock,
                              source=self.user.position))
        try:
            if not text.strip():
                raise EmptyQuery("query is empty")
            if self._try_become(text):
                return
            if refresh_due(self.clock, self.capture_times[-1]):
                self._capture_views()
            first_person, birds_eye = self.views
            bundle = build_prompt_bundle(self.persona, self.scene, birds_eye,
                                         first_person, text)
            if getattr(self.backend, "deferred", False):
                self._launch_deferred(bundle)
                return
            raw = self._complete(bundle)
            self._finish_response(bundle.user_query, raw, latency=0.0)
        except GuideError as exc:
            self._append(ERROR, exc.payload())

    def _complete(self, bundle):
        if isinstance(self.backend, RuleBackend):
            grounding = RuleGrounding(scene=self.scene, pose=self.user,
                                      persona=self.persona,
                                      fov=self.config.fov_deg,
                                      max_range=self.config.max_range)
            return self.backend.complete(bundle, grounding)
        return self.backend.complete(bundle)

    def _finish_response(self, query: str, raw_text: str, latency: float):
        surfaced, intent = extract_action(raw_text, self.scene)
        if intent is not None and intent.kind == GO_TO and self.guide_state.grabbed:
            surfaced, intent = CLARIFY_BUSY, None
        self._emit(AudioEvent(kind=RESPONSE_READY, t=self.clock,
                              source=self.user.position))
        self._append(GUIDE_RESPONSE, {
            "query": query, "text": surfaced,
            "backend": getattr(self.backend, "name", "unknown"),
            "latency": latency,
            "intent": None if intent is None else {
                "kind": intent.kind, "object_id": intent.object_id,
                "mode": intent.mode}})
        if intent is not None:
            self._dispatch(intent)

    def _dispatch(self, intent):
        if intent.kind == GO_TO:
            output = agent.apply_command(
                self.guide_state,
                GuideCommand(kind=agent.REQUEST_NAVIGATION,
                             target=intent.object_id, mode=intent.mode),
                self.scene, self.user, self.guide, now=self.clock,
                footstep_accum=self._guide_footstep_accum)
            # The Action entry records a rejection; the query already got its
            # one GuideResponse, so no separate Error entry here.
            self._absorb(output, record_error=False)
            self._append(ACTION, {
                "intent": {"kind": intent.kind, "object_id": intent.object_id,
                           "mode": intent.mode},
                "status": "rejected" if output.error else "accepted",
                "error": output.error.code if output.error else None})
        elif intent.kind == ADD_BEACON:
            self.beacons.place(self.scene, intent.object_id, now=self.clock,
                               duration=self.config.beacon_duration,
                               ping_interval=self.config.ping_interval)
            self._append(ACTION, {
                "intent": {"kind": intent.kind, "object_id": intent.object_id,
                           "mode": None},
                "status": "accepted", "error": None})

    # --- deferred (remote) completions -------------------------------------------

    def _launch_deferred(self, bundle):
        box = {"text": None, "error": None, "done": False, "latency": 0.0}

        def worker():
            import time
            started = time.monotonic()
            try:
                box["text"] = self.backend.complete(bundle)
            except GuideError as exc:
                box["error"] = exc
            finally:
                box["latency"] = time.monotonic() - started
                with self._pending_lock:
                    box["done"] = True

        thread = threading.Thread(target=worker, daemon=True)
        self._pending = {"bundle": bundle, "box": box, "thread": thread}
        thread.start()

    def _drain_pending_response(self):
        if self._pending is None:
            return
        box = self._pending["box"]
        with self._pending_lock:
            if not box["done"]:
                return
        bundle = self._pending["bundle"]
        self._pending = None
        if box["error"] is not None:
            self._append(ERROR, box["error"].payload())
            return
        try:
            self._finish_response(bundle.user_query, box["text"],
                                  latency=box["latency"])
        except GuideError as exc:
            self._append(ERROR, exc.payload())

    @property
    def query_pending(self) -> bool:
        return self._pending is not None

    # --- persona switching ----------------------------------------------------------

    def _try_become(self, text: str) -> bool:
        normalized = text.replace("’", "'").strip().lower()
        match = _BECOME.search(normalized)
        if not match:
            return False
        name = match.group("name").strip()
        persona = self._lookup_persona(name)
        if persona is None:
            return False
        self._emit(AudioEvent(kind=RESPONSE_READY, t=self.clock,
                              source=self.user.position))
        self._append(GUIDE_RESPONSE, {
            "query": text,
            "text": f"From now on, I will be your {persona.display_name}.",
            "backend": getattr(self.backend, "name", "unknown"),
            "latency": 0.0, "intent": None})
        self._switch_to(persona)
        return True

    def _lookup_persona(self, name: str) -> Persona | None:
        if name in self.registry:
            return self.registry[name]
        for persona in self.registry.values():
            if persona.display_name.lower() == name:
                return persona
        return None

    def switch_persona(self, persona_id: str):
        try:
            persona = get_persona(persona_id, self.registry)
        except UnknownPersona as exc:
            self._append(ERROR, exc.payload())
            return
        self._switch_to(persona)

    def _switch_to(self, persona: Persona):
        previous = self.persona.id
        if self.guide_state.kind != agent.FOLLOWING:
            output = agent.apply_command(
                self.guide_state, GuideCommand(kind=agent.CANCEL_NAVIGATION),
                self.scene, self.user, self.guide, now=self.clock,
                footstep_accum=self._guide_footstep_accum)
            self._absorb(output)
        self.persona = persona
        self._guide_footstep_accum = 0.0
        self._append(PERSONA_CHANGED, {"persona": persona.id,
                                       "previous": previous})

    # --- teardown ---------------------------------------------------------------------

    def finish(self, reason: str):
        if self._closed:
            return
        self._closed = True
        self._append(SESSION_END, {"reason": reason})


def create_session(scene: Scene, persona_id: str = "human", backend=None,
                   config: SessionConfig | None = None, seed: int = 0,
                   extra_personas: tuple[Persona, ...] = ()) -> Session:
    registry = persona_registry(extra_personas)
    persona = get_persona(persona_id, registry)
    return Session(scene=scene, persona=persona,
                   backend=backend if backend is not None else RuleBackend(),
                   config=config if config is not None else SessionConfig(),
                   seed=seed, extra_personas=extra_personas)


# --- script harness ---------------------------------------------------------------------

def parse_script(text: str) -> list[tuple]:
    """Line DSL for headless runs.

    query <text> | turn <radians> | move <forward> <strafe> <seconds> |
    teleport <x> <z> | grab | release | persona <id> | wait <seconds> | quit
    Blank lines and '#' comments are skipped.
    """
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if word == "query":
                if not rest:
                    raise ValueError("query needs text")
                ops.append(("query", rest))
            elif word == "turn":
                ops.append(("turn", float(rest)))
            elif word == "move":
                forward, strafe, seconds = (float(v) for v in rest.split())
                ops.append(("move", forward, strafe, seconds))
            elif word == "teleport":
                x, z = (float(v) for v in rest.split())
                ops.append(("teleport", x, z))
            elif word == "grab" and not rest:
                ops.append(("grab",))
            elif word == "release" and not rest:
                ops.append(("release",))
            elif word == "persona":
                if not rest:
                    raise ValueError("persona needs an id")
                ops.append(("persona", rest))
            elif word == "wait":
                ops.append(("wait", float(rest)))
            elif word == "quit" and not rest:
                ops.append(("quit",))
            else:
                raise ValueError(f"unknown directive {word!r}")
        except ValueError as exc:
            raise ValueError(f"script line {lineno}: {exc}") from exc
    return ops


def _ticks_for(seconds: float, dt: float) -> int:
    return max(0, round(seconds / dt))


def run_ops(session: Session, ops, finalize: bool = True) -> None:
    """Execute parsed script operations; finalize ends the session after
    the batch (scripts), interactive callers pass finalize=False."""
    for op in ops:
        if session.closed:
            break
        kind = op[0]
        if kind == "query":
            session.step([Query(text=op[1])])
        elif kind == "turn":
            session.step([TurnBy(radians=op[1])])
        elif kind == "move":
            for _ in range(_ticks_for(op[3], session.config.dt)):
                session.step([Move(forward=op[1], strafe=op[2])])
        elif kind == "teleport":
            session.step([TeleportSelf(position=Vec3(op[1], 0.0, op[2]))])
        elif kind == "grab":
            session.step([Grab()])
        elif kind == "release":
            session.step([Release()])
        elif kind == "persona":
            session.step([SwitchPersona(persona_id=op[1])])
        elif kind == "wait":
            for _ in range(_ticks_for(op[1], session.config.dt)):
                session.step([])
        elif kind == "quit":
            session.step([Quit()])
    if finalize and not session.closed:
        session.finish("script_end")


def run_script(scene: Scene, script_text: str, persona_id: str = "human",
               backend=None, config: SessionConfig | None = None,
               seed: int = 0, out_path=None) -> tuple[Session, bool]:
    """Execute a script headlessly. Returns (session, had_errors)."""
    ops = parse_script(script_text)
    session = create_session(scene, persona_id=persona_id, backend=backend,
                             config=config, seed=seed)
    run_ops(session, ops)
    if out_path is not None:
        session.transcript.save(out_path)
    had_errors = any(e.kind == ERROR for e in session.transcript.entries)
    return session, had_errors
