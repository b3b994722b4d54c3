"""Sonification primitives: beacons, spatial attenuation, and movement cues.

Everything here is a structured event; rendering to actual sound is a client
concern. Events carry a timestamp, a world position, and a small detail
mapping, which is exactly what the transcript and the wire protocol serialize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import UnknownObject
from .scene import Pose, Scene, Vec3, relative_angle

USER_FOOTSTEP = "user_footstep"
GUIDE_FOOTSTEP = "guide_footstep"
TURN = "turn"
TELEPORT = "teleport"
BEACON_PING = "beacon_ping"
PROCESSING = "processing"
RESPONSE_READY = "response_ready"
ARRIVAL = "arrival"
HAPTIC_GRAB = "haptic_grab"

# Kinds that render at the listener, not in the world.
NON_SPATIAL = frozenset({PROCESSING, RESPONSE_READY, HAPTIC_GRAB})

DEFAULT_BEACON_DURATION = 30.0
DEFAULT_PING_INTERVAL = 1.0
STRIDE_LENGTH = 0.7
TURN_STEP = math.pi / 4


@dataclass(frozen=True)
class AudioEvent:
    kind: str
    t: float
    source: Vec3
    detail: dict = field(default_factory=dict)

    def as_payload(self) -> dict:
        return {"kind": self.kind, "t": self.t,
                "source": self.source.as_list(), "detail": dict(self.detail)}


@dataclass(frozen=True)
class SpatialGain:
    gain: float
    pan: float


@dataclass(frozen=True)
class Beacon:
    object_id: str
    created_at: float
    duration: float = DEFAULT_BEACON_DURATION
    ping_interval: float = DEFAULT_PING_INTERVAL

    def __post_init__(self):
        if self.duration <= 0.0 or self.ping_interval <= 0.0:
            raise ValueError("beacon duration and ping_interval must be > 0")

    @property
    def expires_at(self) -> float:
        return self.created_at + self.duration

    def pings_between(self, t0: float, t1: float) -> list[float]:
        """Ping times in (t0, t1], never later than expiry.

        Pings fire at created_at + k*ping_interval for k = 1..floor(duration /
        ping_interval), so a default beacon pings exactly 30 times and the
        last ping lands on the expiry instant itself.
        """
        last_k = math.floor(self.duration / self.ping_interval + 1e-9)
        first_k = max(1, math.floor((t0 - self.created_at) / self.ping_interval) + 1)
        times = []
        for k in range(first_k, last_k + 1):
            ping_t = self.created_at + k * self.ping_interval
            if ping_t <= t0:
                continue
            if ping_t > t1:
                break
            times.append(ping_t)
        return times


class BeaconRegistry:
    """Active beacons, at most one per object; replacing restarts the timer."""

    def __init__(self):
        self._beacons: dict[str, Beacon] = {}

    def place(self, scene: Scene, object_id: str, now: float,
              duration: float = DEFAULT_BEACON_DURATION,
              ping_interval: float = DEFAULT_PING_INTERVAL) -> Beacon:
        if not scene.has_object(object_id):
            raise UnknownObject(f"no object with id {object_id!r}")
        beacon = Beacon(object_id=object_id, created_at=now,
                        duration=duration, ping_interval=ping_interval)
        self._beacons[object_id] = beacon
        return beacon

    def active(self) -> tuple[Beacon, ...]:
        return tuple(self._beacons[k] for k in sorted(self._beacons))

    def tick(self, scene: Scene, t0: float, t1: float) -> list[AudioEvent]:
        """Pings due in (t0, t1], ordered by (time, object id); drops expired."""
        if t1 <= t0:
            raise ValueError("tick window must advance time")
        events = []
        for object_id in sorted(self._beacons):
            beacon = self._beacons[object_id]
            source = scene.object_by_id(object_id).position
            for ping_t in beacon.pings_between(t0, t1):
                events.append(AudioEvent(
                    kind=BEACON_PING, t=ping_t, source=source,
                    detail={"object_id": object_id}))
        for object_id in list(self._beacons):
            if self._beacons[object_id].expires_at <= t1:
                del self._beacons[object_id]
        events.sort(key=lambda e: (e.t, e.detail["object_id"]))
        return events


def attenuate(event: AudioEvent, listener: Pose, max_range: float) -> SpatialGain:
    """Linear distance falloff plus stereo pan from the relative bearing."""
    if max_range <= 0.0:
        raise ValueError("max_range must be > 0")
    if event.kind in NON_SPATIAL:
        return SpatialGain(gain=1.0, pan=0.0)
    distance = listener.position.horizontal_distance(event.source)
    gain = min(1.0, max(0.0, 1.0 - distance / max_range))
    pan = math.sin(relative_angle(listener, event.source)) if distance > 1e-12 else 0.0
    return SpatialGain(gain=gain, pan=pan)


@dataclass(frozen=True)
class MovementCueState:
    """Carry-over between ticks: distance toward the next footstep and signed
    yaw accumulated toward the next turn cue (positive = clockwise/right)."""

    distance_accum: float = 0.0
    turn_accum: float = 0.0


def _signed_yaw_delta(prev_yaw: float, next_yaw: float) -> float:
    delta = math.fmod(next_yaw - prev_yaw, 2 * math.pi)
    if delta > math.pi:
        delta -= 2 * math.pi
    elif delta <= -math.pi:
        delta += 2 * math.pi
    return delta


def movement_cues(prev: Pose, nxt: Pose, state: MovementCueState, now: float,
                  stride: float = STRIDE_LENGTH,
                  turn_step: float = TURN_STEP) -> tuple[list[AudioEvent], MovementCueState]:
    """Footsteps per stride of displacement, turn cues per turn_step of yaw.

    Turn accumulation resets when the turn direction reverses, so wiggling
    in place never triggers a cue.
    """
    events = []

    distance = state.distance_accum + prev.position.horizontal_distance(nxt.position)
    while distance >= stride - 1e-12:
        distance -= stride
        events.append(AudioEvent(kind=USER_FOOTSTEP, t=now, source=nxt.position))

    delta = _signed_yaw_delta(prev.yaw, nxt.yaw)
    turn = state.turn_accum
    if turn * delta < 0.0:
        turn = 0.0
    turn += delta
    while abs(turn) >= turn_step - 1e-12:
        direction = "right" if turn > 0 else "left"
        turn -= math.copysign(turn_step, turn)
        events.append(AudioEvent(kind=TURN, t=now, source=nxt.position,
                                 detail={"direction": direction}))

    return events, MovementCueState(distance_accum=distance, turn_accum=turn)
