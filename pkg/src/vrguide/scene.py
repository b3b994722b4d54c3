"""Virtual environment model: objects, walkable grid, poses, and the two
structured views (first-person and bird's-eye) that ground the guide's answers.

The ground plane is x-z and y points up. Yaw is in radians in [0, 2pi),
0 = facing +z, increasing clockwise when viewed from above.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import (
    AnchorBlocked,
    DuplicateObjectId,
    EmptyDescription,
    MalformedScene,
    UnknownObject,
)

TWO_PI = 2.0 * math.pi

FIRST_PERSON = "first_person"
BIRDS_EYE = "birds_eye"

DEFAULT_FOV_DEG = 90.0
DEFAULT_MAX_RANGE = 50.0


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise ValueError(f"non-finite vector component: {self}")

    def add(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def sub(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def horizontal_distance(self, other: "Vec3") -> float:
        return math.hypot(other.x - self.x, other.z - self.z)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle into [0, 2pi)."""
    yaw = math.fmod(yaw, TWO_PI)
    if yaw < 0.0:
        yaw += TWO_PI
    return yaw if yaw < TWO_PI else 0.0


@dataclass(frozen=True)
class Pose:
    position: Vec3
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    def forward(self) -> Vec3:
        return Vec3(math.sin(self.yaw), 0.0, math.cos(self.yaw))

    def right(self) -> Vec3:
        return Vec3(math.cos(self.yaw), 0.0, -math.sin(self.yaw))


def world_angle(dx: float, dz: float) -> float:
    """Angle of a horizontal direction in the yaw convention (clockwise from +z)."""
    return normalize_yaw(math.atan2(dx, dz))


def relative_angle(pose: Pose, point: Vec3) -> float:
    """Signed angle from the pose's facing to the point, in (-pi, pi].

    Positive values are to the viewer's right (clockwise from above).
    """
    angle = world_angle(point.x - pose.position.x, point.z - pose.position.z)
    rel = math.fmod(angle - pose.yaw, TWO_PI)
    if rel > math.pi:
        rel -= TWO_PI
    elif rel <= -math.pi:
        rel += TWO_PI
    return rel


def clock_bearing(pose: Pose, point: Vec3) -> int:
    """Map the relative angle to a clock position: 12 dead ahead, 3 due right."""
    rel_deg = math.degrees(normalize_yaw(
        world_angle(point.x - pose.position.x, point.z - pose.position.z) - pose.yaw))
    hour = int(math.floor((rel_deg + 15.0) / 30.0)) % 12
    return 12 if hour == 0 else hour


@dataclass(frozen=True)
class SceneObject:
    id: str
    display_name: str
    description: str
    color_tag: str
    shape_tag: str
    position: Vec3
    radius: float
    anchor: Vec3


@dataclass(frozen=True)
class WalkGrid:
    origin: Vec3
    cell_size: float
    width: int
    height: int
    blocked: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def cell_of(self, point: Vec3) -> tuple[int, int]:
        col = int(math.floor((point.x - self.origin.x) / self.cell_size))
        row = int(math.floor((point.z - self.origin.z) / self.cell_size))
        return col, row

    def cell_center(self, cell: tuple[int, int]) -> Vec3:
        col, row = cell
        return Vec3(
            self.origin.x + (col + 0.5) * self.cell_size,
            self.origin.y,
            self.origin.z + (row + 0.5) * self.cell_size,
        )

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        col, row = cell
        return 0 <= col < self.width and 0 <= row < self.height

    def walkable(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked

    def point_walkable(self, point: Vec3) -> bool:
        return self.walkable(self.cell_of(point))


@dataclass(frozen=True)
class Scene:
    name: str
    objects: tuple[SceneObject, ...]
    grid: WalkGrid
    spawn: Pose

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise UnknownObject(f"no object with id {object_id!r}")

    def has_object(self, object_id: str) -> bool:
        return any(obj.id == object_id for obj in self.objects)


@dataclass(frozen=True)
class ViewEntry:
    object_id: str
    display_name: str
    description: str
    distance: float | None = None
    bearing: int | None = None
    position: Vec3 | None = None


@dataclass(frozen=True)
class SceneView:
    kind: str  # FIRST_PERSON or BIRDS_EYE
    entries: tuple[ViewEntry, ...]
    captured_at: float


def _require(mapping: dict, key: str, kind: type):
    if key not in mapping:
        raise MalformedScene(f"missing key {key!r}")
    value = mapping[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise MalformedScene(f"key {key!r} has wrong type: {value!r}")
    return value


def _parse_vec3(raw, label: str) -> Vec3:
    if not isinstance(raw, list) or len(raw) != 3:
        raise MalformedScene(f"{label} must be a [x, y, z] triple")
    try:
        return Vec3(float(raw[0]), float(raw[1]), float(raw[2]))
    except (TypeError, ValueError) as exc:
        raise MalformedScene(f"{label} has a bad component: {exc}") from exc


def load_scene(data: bytes | str) -> Scene:
    """Parse a scene file (UTF-8 JSON) and validate every invariant."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedScene(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedScene("scene document must be a JSON object")

    name = _require(doc, "name", str)

    raw_grid = _require(doc, "grid", dict)
    cell_size = _require(raw_grid, "cell_size", float)
    if cell_size <= 0:
        raise MalformedScene("grid cell_size must be > 0")
    width = _require(raw_grid, "width", int)
    height = _require(raw_grid, "height", int)
    if width < 1 or height < 1:
        raise MalformedScene("grid must be at least 1x1")
    blocked = set()
    for raw_cell in raw_grid.get("blocked", []):
        if not isinstance(raw_cell, list) or len(raw_cell) != 2:
            raise MalformedScene("blocked entries must be [col, row] pairs")
        blocked.add((int(raw_cell[0]), int(raw_cell[1])))
    grid = WalkGrid(
        origin=_parse_vec3(raw_grid.get("origin", [0, 0, 0]), "grid origin"),
        cell_size=cell_size,
        width=width,
        height=height,
        blocked=frozenset(blocked),
    )

    raw_spawn = _require(doc, "spawn", dict)
    spawn = Pose(
        position=_parse_vec3(raw_spawn.get("position"), "spawn position"),
        yaw=float(raw_spawn.get("yaw", 0.0)),
    )
    if not grid.walkable(grid.cell_of(spawn.position)):
        raise MalformedScene("spawn cell is blocked or out of bounds")

    objects = []
    seen_ids = set()
    for raw_obj in _require(doc, "objects", list):
        if not isinstance(raw_obj, dict):
            raise MalformedScene("each object must be a JSON object")
        obj_id = _require(raw_obj, "id", str)
        if obj_id in seen_ids:
            raise DuplicateObjectId(f"duplicate object id {obj_id!r}")
        seen_ids.add(obj_id)
        description = _require(raw_obj, "description", str)
        if not description:
            raise EmptyDescription(f"object {obj_id!r} has an empty description")
        radius = _require(raw_obj, "radius", float)
        if radius <= 0:
            raise MalformedScene(f"object {obj_id!r} radius must be > 0")
        anchor = _parse_vec3(raw_obj.get("anchor"), f"object {obj_id!r} anchor")
        if not grid.walkable(grid.cell_of(anchor)):
            raise AnchorBlocked(
                f"object {obj_id!r} anchor cell {grid.cell_of(anchor)} is blocked or out of bounds")
        objects.append(SceneObject(
            id=obj_id,
            display_name=_require(raw_obj, "display_name", str),
            description=description,
            color_tag=str(raw_obj.get("color", "")).lower(),
            shape_tag=str(raw_obj.get("shape", "")).lower(),
            position=_parse_vec3(raw_obj.get("position"), f"object {obj_id!r} position"),
            radius=radius,
            anchor=anchor,
        ))

    return Scene(name=name, objects=tuple(objects), grid=grid, spawn=spawn)


def serialize_scene(scene: Scene) -> bytes:
    """Inverse of load_scene; round-trips all fields."""
    doc = {
        "name": scene.name,
        "spawn": {"position": scene.spawn.position.as_list(), "yaw": scene.spawn.yaw},
        "grid": {
            "origin": scene.grid.origin.as_list(),
            "cell_size": scene.grid.cell_size,
            "width": scene.grid.width,
            "height": scene.grid.height,
            "blocked": sorted([c, r] for c, r in scene.grid.blocked),
        },
        "objects": [
            {
                "id": o.id,
                "display_name": o.display_name,
                "description": o.description,
                "color": o.color_tag,
                "shape": o.shape_tag,
                "position": o.position.as_list(),
                "radius": o.radius,
                "anchor": o.anchor.as_list(),
            }
            for o in scene.objects
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")


def first_person_view(scene: Scene, pose: Pose, fov: float = DEFAULT_FOV_DEG,
                      max_range: float = DEFAULT_MAX_RANGE, now: float = 0.0) -> SceneView:
    """Objects within max_range and +-fov/2 of the facing direction.

    Horizontal angles only, no occlusion. Sorted by distance, id as tie-break.
    """
    if not 0.0 < fov <= 360.0:
        raise ValueError("fov must be in (0, 360]")
    if max_range <= 0.0:
        raise ValueError("max_range must be > 0")
    half_fov = math.radians(fov) / 2.0
    entries = []
    for obj in scene.objects:
        distance = pose.position.horizontal_distance(obj.position)
        if distance > max_range:
            continue
        if abs(relative_angle(pose, obj.position)) > half_fov:
            continue
        entries.append(ViewEntry(
            object_id=obj.id,
            display_name=obj.display_name,
            description=obj.description,
            distance=distance,
            bearing=clock_bearing(pose, obj.position),
        ))
    entries.sort(key=lambda e: (e.distance, e.object_id))
    return SceneView(kind=FIRST_PERSON, entries=tuple(entries), captured_at=now)


def birds_eye_view(scene: Scene, now: float = 0.0) -> SceneView:
    """Every scene object exactly once, with description and position."""
    entries = tuple(
        ViewEntry(
            object_id=o.id,
            display_name=o.display_name,
            description=o.description,
            position=o.position,
        )
        for o in scene.objects
    )
    return SceneView(kind=BIRDS_EYE, entries=entries, captured_at=now)


def object_range_and_bearing(scene: Scene, pose: Pose, object_id: str) -> tuple[float, int]:
    obj = scene.object_by_id(object_id)
    distance = pose.position.horizontal_distance(obj.position)
    return distance, clock_bearing(pose, obj.position)
