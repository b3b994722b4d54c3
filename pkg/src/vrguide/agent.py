"""The guide's finite-state machine.

Three states: Following (default), AwaitingGrab (navigation offered, guide
holds still with its grab collider on), Escorting (user holds the guide and
both travel to the target anchor). apply_command and tick are pure: they
return a GuideOutput describing the next state, both poses, and any audio
events, leaving the caller to thread the values forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .audio import (ARRIVAL, GUIDE_FOOTSTEP, HAPTIC_GRAB, STRIDE_LENGTH,
                    TELEPORT as TELEPORT_EVENT, AudioEvent)
from .errors import (GuideBusy, GuideError, InvalidEndpoint, NotGrabbable,
                     Unreachable, UnknownTarget)
from .pathfinding import Path, advance, follow_anchor, plan_path
from .personas import Persona
from .scene import Pose, Scene, Vec3, world_angle

FOLLOWING = "following"
AWAITING_GRAB = "awaiting_grab"
ESCORTING = "escorting"

WALK = "walk"
TELEPORT = "teleport"
MODES = (WALK, TELEPORT)

REQUEST_NAVIGATION = "request_navigation"
GRAB = "grab"
RELEASE = "release"
CANCEL_NAVIGATION = "cancel_navigation"

GUIDE_SPEED = 1.4  # m/s, walking pace
_HOLD_EPS = 1e-9


@dataclass(frozen=True)
class GuideState:
    kind: str = FOLLOWING
    target: str | None = None
    mode: str | None = None
    path: Path | None = None

    def __post_init__(self):
        if self.kind == FOLLOWING:
            assert self.target is None and self.mode is None and self.path is None
        elif self.kind == AWAITING_GRAB:
            assert self.target is not None and self.mode in MODES
            assert self.path is None
        elif self.kind == ESCORTING:
            assert self.target is not None and self.mode == WALK
            assert self.path is not None
        else:
            raise AssertionError(f"unknown state kind {self.kind!r}")

    @property
    def grabbable(self) -> bool:
        return self.kind == AWAITING_GRAB

    @property
    def grabbed(self) -> bool:
        return self.kind == ESCORTING


FOLLOWING_STATE = GuideState()


@dataclass(frozen=True)
class GuideCommand:
    kind: str
    target: str | None = None
    mode: str | None = None


@dataclass(frozen=True)
class GuideOutput:
    state: GuideState
    guide: Pose
    user: Pose
    events: tuple[AudioEvent, ...] = ()
    footstep_accum: float = 0.0
    error: GuideError | None = None


def apply_command(state: GuideState, cmd: GuideCommand, scene: Scene,
                  user: Pose, guide: Pose, now: float = 0.0,
                  footstep_accum: float = 0.0) -> GuideOutput:
    """Feed one command to the FSM.

    Rejections the caller is expected to voice back to the user (grabbing a
    non-grabbable guide, asking for navigation mid-escort, an unreachable
    target) come back in GuideOutput.error with the state already settled;
    a target that is not in the scene at all raises UnknownTarget.
    """

    def out(new_state, new_guide=guide, new_user=user, events=(), error=None):
        return GuideOutput(state=new_state, guide=new_guide, user=new_user,
                           events=tuple(events), footstep_accum=footstep_accum,
                           error=error)

    if cmd.kind == REQUEST_NAVIGATION:
        if cmd.mode not in MODES:
            raise ValueError(f"unknown navigation mode {cmd.mode!r}")
        if not scene.has_object(cmd.target):
            raise UnknownTarget(f"no object with id {cmd.target!r}")
        if state.kind == ESCORTING:
            return out(state, error=GuideBusy(
                "navigation already in progress; release the guide first"))
        # Following starts a request; AwaitingGrab replaces the pending one.
        return out(GuideState(kind=AWAITING_GRAB, target=cmd.target, mode=cmd.mode))

    if cmd.kind == GRAB:
        if state.kind != AWAITING_GRAB:
            return out(state, error=NotGrabbable(
                "the guide can only be grabbed after offering navigation"))
        anchor = scene.object_by_id(state.target).anchor
        if state.mode == TELEPORT:
            return _grab_teleport(state, scene, anchor, now, footstep_accum)
        try:
            path = plan_path(scene.grid, guide.position, anchor)
        except (Unreachable, InvalidEndpoint) as exc:
            # Following steers in a straight line and may park the guide off
            # the walkable grid; treat that like an unreachable target.
            return out(FOLLOWING_STATE, error=exc)
        haptic = AudioEvent(kind=HAPTIC_GRAB, t=now, source=user.position)
        return out(GuideState(kind=ESCORTING, target=state.target, mode=WALK,
                              path=path),
                   events=(haptic,))

    if cmd.kind == RELEASE:
        if state.kind == ESCORTING:
            return out(FOLLOWING_STATE)
        return out(state)  # releasing nothing is a no-op

    if cmd.kind == CANCEL_NAVIGATION:
        if state.kind in (AWAITING_GRAB, ESCORTING):
            return out(FOLLOWING_STATE)
        return out(state)

    raise ValueError(f"unknown guide command {cmd.kind!r}")


def _grab_teleport(state: GuideState, scene: Scene, anchor: Vec3, now: float,
                   footstep_accum: float) -> GuideOutput:
    target = scene.object_by_id(state.target)
    facing = world_angle(target.position.x - anchor.x,
                         target.position.z - anchor.z)
    landing = Pose(position=anchor, yaw=facing)
    events = (
        AudioEvent(kind=HAPTIC_GRAB, t=now, source=anchor),
        AudioEvent(kind=TELEPORT_EVENT, t=now, source=anchor),
        AudioEvent(kind=ARRIVAL, t=now, source=target.position),
    )
    return GuideOutput(state=FOLLOWING_STATE, guide=landing, user=landing,
                       events=events, footstep_accum=footstep_accum)


def _footsteps(accum: float, moved: float, position: Vec3, persona: Persona,
               now: float, stride: float) -> tuple[list[AudioEvent], float]:
    if persona.footstep_profile == "none":
        return [], 0.0
    accum += moved
    events = []
    while accum >= stride - 1e-12:
        accum -= stride
        events.append(AudioEvent(kind=GUIDE_FOOTSTEP, t=now, source=position,
                                 detail={"profile": persona.footstep_profile}))
    return events, accum


def tick(state: GuideState, scene: Scene, user: Pose, guide: Pose,
         persona: Persona, dt: float, speed: float = GUIDE_SPEED,
         now: float = 0.0, footstep_accum: float = 0.0,
         stride: float = STRIDE_LENGTH) -> GuideOutput:
    """Advance the guide by one time slice.

    Following walks the guide toward its persona anchor (perched placements
    snap instead); AwaitingGrab freezes it; Escorting advances along the
    path with the user trailing one step behind, emitting Arrival once the
    path is consumed.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")

    if state.kind == AWAITING_GRAB:
        return GuideOutput(state=state, guide=guide, user=user,
                           footstep_accum=footstep_accum)

    if state.kind == FOLLOWING:
        anchor = follow_anchor(user, persona.placement)
        if persona.placement.snap_to_user:
            moved = guide.position.horizontal_distance(anchor)
            events, accum = _footsteps(footstep_accum, moved, anchor,
                                       persona, now, stride)
            return GuideOutput(state=state,
                               guide=Pose(position=anchor, yaw=user.yaw),
                               user=user, events=tuple(events),
                               footstep_accum=accum)
        dx = anchor.x - guide.position.x
        dz = anchor.z - guide.position.z
        gap = math.hypot(dx, dz)
        if gap <= _HOLD_EPS:
            return GuideOutput(state=state, guide=guide, user=user,
                               footstep_accum=footstep_accum)
        step = min(speed * dt, gap)
        position = Vec3(guide.position.x + dx / gap * step, anchor.y,
                        guide.position.z + dz / gap * step)
        pose = Pose(position=position, yaw=world_angle(dx, dz))
        events, accum = _footsteps(footstep_accum, step, position, persona,
                                   now, stride)
        return GuideOutput(state=state, guide=pose, user=user,
                           events=tuple(events), footstep_accum=accum)

    # Escorting: guide leads, user snaps to where the guide just was.
    previous = guide.position
    result = advance(guide, state.path, speed=speed, dt=dt)
    trailing = Pose(position=previous, yaw=result.pose.yaw)
    events, accum = _footsteps(footstep_accum, result.distance_moved,
                               result.pose.position, persona, now, stride)
    if result.arrived:
        target = scene.object_by_id(state.target)
        events.append(AudioEvent(kind=ARRIVAL, t=now, source=target.position))
        return GuideOutput(state=FOLLOWING_STATE, guide=result.pose,
                           user=trailing, events=tuple(events),
                           footstep_accum=accum)
    next_state = GuideState(kind=ESCORTING, target=state.target, mode=WALK,
                            path=result.remaining)
    return GuideOutput(state=next_state, guide=result.pose, user=trailing,
                       events=tuple(events), footstep_accum=accum)
