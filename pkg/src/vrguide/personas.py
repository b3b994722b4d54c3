"""The six built-in guide personas and the optional persona-pack loader.

A persona bundles everything that changes when the guide takes a new form:
the descriptor sentence spliced into the system prompt, where it stands
relative to the user, whether it is rendered, and which voice/footstep
profiles tag its output events.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import MalformedPersonaPack, UnknownPersona

FOOTSTEP_PROFILES = ("human_steps", "paw_steps", "cane_taps", "metal_steps",
                     "wing_flaps", "none")


@dataclass(frozen=True)
class PlacementSpec:
    """Offset (dx, dz) in the user's local frame: x right, z forward.

    snap_to_user marks placements that track the user rigidly (a perched
    guide) instead of walking toward the anchor.
    """

    offset: tuple[float, float]
    snap_to_user: bool = False

    def __post_init__(self):
        if self.follow_distance <= 0.0:
            raise ValueError("placement offset must be nonzero")

    @property
    def follow_distance(self) -> float:
        return math.hypot(self.offset[0], self.offset[1])


@dataclass(frozen=True)
class Persona:
    id: str
    display_name: str
    descriptor: str
    placement: PlacementSpec
    visible: bool = True
    voice_profile: str = "warm"
    footstep_profile: str = "human_steps"

    def __post_init__(self):
        if not self.descriptor:
            raise ValueError("persona descriptor must be non-empty")
        if self.footstep_profile not in FOOTSTEP_PROFILES:
            raise ValueError(f"unknown footstep profile {self.footstep_profile!r}")


_BEHIND = PlacementSpec(offset=(0.0, -0.75))

_BUILTINS = (
    Persona(
        id="human",
        display_name="Human",
        descriptor="warm, friendly, but still professional sighted guide",
        placement=_BEHIND,
        voice_profile="warm",
        footstep_profile="human_steps",
    ),
    Persona(
        id="guide_dog",
        display_name="Guide Dog",
        descriptor=("very friendly, excited companion, who is eager to please "
                    "who you're talking to"),
        placement=PlacementSpec(offset=(-0.6, 0.0)),
        voice_profile="excited",
        footstep_profile="paw_steps",
    ),
    Persona(
        id="white_cane",
        display_name="White Cane",
        descriptor="computer-like, succinct assistant, who gives the straight facts",
        placement=PlacementSpec(offset=(0.0, 0.5)),
        voice_profile="succinct",
        footstep_profile="cane_taps",
    ),
    Persona(
        id="robot",
        display_name="Robot",
        descriptor="formal and assertive assistant, who talks like a robot",
        placement=_BEHIND,
        voice_profile="robotic",
        footstep_profile="metal_steps",
    ),
    Persona(
        id="bird",
        display_name="Bird",
        descriptor="wise, old-fashioned, slightly Shakespearean-sounding mentor",
        placement=PlacementSpec(offset=(0.25, 0.0), snap_to_user=True),
        voice_profile="archaic",
        footstep_profile="wing_flaps",
    ),
    Persona(
        id="invisible",
        display_name="Invisible",
        descriptor=("gentle, soft-spoken assistant who gives very brief "
                    "statements, as though slipping in words to someone "
                    "without trying to interrupt what they're doing"),
        placement=_BEHIND,
        visible=False,
        voice_profile="soft",
        footstep_profile="none",
    ),
)


def builtin_personas() -> tuple[Persona, ...]:
    return _BUILTINS


def persona_registry(extra: tuple[Persona, ...] = ()) -> dict[str, Persona]:
    registry = {p.id: p for p in _BUILTINS}
    for persona in extra:
        registry[persona.id] = persona
    return registry


def get_persona(persona_id: str,
                registry: dict[str, Persona] | None = None) -> Persona:
    table = registry if registry is not None else persona_registry()
    try:
        return table[persona_id]
    except KeyError:
        raise UnknownPersona(f"no persona registered with id {persona_id!r}") from None


def load_persona_pack(data: bytes | str) -> tuple[Persona, ...]:
    """Parse a JSON persona pack: a list of persona records.

    Each record carries the same fields as the built-ins, with the placement
    given as "offset": [dx, dz] plus an optional "snap_to_user" flag.
    """
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedPersonaPack(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedPersonaPack("persona pack must be a JSON list")
    personas = []
    seen = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise MalformedPersonaPack(f"entry {i} is not an object")
        try:
            offset = entry["offset"]
            if (not isinstance(offset, list) or len(offset) != 2
                    or not all(isinstance(v, (int, float)) for v in offset)):
                raise MalformedPersonaPack(
                    f"entry {i}: offset must be [dx, dz] numbers")
            persona = Persona(
                id=str(entry["id"]),
                display_name=str(entry["display_name"]),
                descriptor=str(entry["descriptor"]),
                placement=PlacementSpec(
                    offset=(float(offset[0]), float(offset[1])),
                    snap_to_user=bool(entry.get("snap_to_user", False)),
                ),
                visible=bool(entry.get("visible", True)),
                voice_profile=str(entry.get("voice_profile", "warm")),
                footstep_profile=str(entry.get("footstep_profile", "human_steps")),
            )
        except KeyError as exc:
            raise MalformedPersonaPack(f"entry {i}: missing field {exc}") from exc
        except ValueError as exc:
            raise MalformedPersonaPack(f"entry {i}: {exc}") from exc
        if persona.id in seen:
            raise MalformedPersonaPack(f"duplicate persona id {persona.id!r}")
        seen.add(persona.id)
        personas.append(persona)
    return tuple(personas)
