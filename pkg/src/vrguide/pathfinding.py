"""Grid A* with octile metric, follow placement math, and motion integration.

Movement is 8-connected; diagonal steps cost sqrt(2) and never cut a blocked
corner. Tie-breaking prefers the lower (row, col) among equal-f frontier nodes,
which makes plans fully deterministic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import InvalidEndpoint, Unreachable
from .scene import Pose, Vec3, WalkGrid, normalize_yaw, world_angle

if TYPE_CHECKING:
    from .personas import PlacementSpec

SQRT2 = math.sqrt(2.0)
ARRIVAL_EPS = 1e-6

_ORTHO = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIAG = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class Path:
    """Waypoints are cell centers, start exclusive, goal inclusive."""

    waypoints: tuple[Vec3, ...]
    cost: float  # octile distance in cells

    @property
    def empty(self) -> bool:
        return not self.waypoints

    @property
    def goal(self) -> Vec3 | None:
        return self.waypoints[-1] if self.waypoints else None


def _octile_cost(steps: list[tuple[int, int]]) -> float:
    straights = sum(1 for dc, dr in steps if dc == 0 or dr == 0)
    diagonals = len(steps) - straights
    return straights * 1.0 + diagonals * SQRT2


def _heuristic(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def neighbors(grid: WalkGrid, cell: tuple[int, int]):
    """Walkable 8-neighbors of a cell; diagonals require both flanking cells."""
    col, row = cell
    for dc, dr in _ORTHO:
        nxt = (col + dc, row + dr)
        if grid.walkable(nxt):
            yield nxt, 1.0
    for dc, dr in _DIAG:
        nxt = (col + dc, row + dr)
        if (grid.walkable(nxt)
                and grid.walkable((col + dc, row))
                and grid.walkable((col, row + dr))):
            yield nxt, SQRT2


def plan_path(grid: WalkGrid, start: Vec3, goal: Vec3) -> Path:
    start_cell = grid.cell_of(start)
    goal_cell = grid.cell_of(goal)
    for label, cell in (("start", start_cell), ("goal", goal_cell)):
        if not grid.walkable(cell):
            raise InvalidEndpoint(f"{label} cell {cell} is blocked or out of bounds")
    if start_cell == goal_cell:
        return Path(waypoints=(), cost=0.0)

    # Heap entries carry (f, row, col) so equal-f ties resolve lexicographically.
    frontier: list[tuple[float, int, int]] = [(0.0, start_cell[1], start_cell[0])]
    g_score: dict[tuple[int, int], float] = {start_cell: 0.0}
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    done: set[tuple[int, int]] = set()

    while frontier:
        _, row, col = heapq.heappop(frontier)
        current = (col, row)
        if current in done:
            continue
        if current == goal_cell:
            break
        done.add(current)
        for nxt, step in neighbors(grid, current):
            tentative = g_score[current] + step
            if tentative < g_score.get(nxt, math.inf):
                g_score[nxt] = tentative
                came_from[nxt] = current
                f = tentative + _heuristic(nxt, goal_cell)
                heapq.heappush(frontier, (f, nxt[1], nxt[0]))
    else:
        raise Unreachable(f"no path from {start_cell} to {goal_cell}")

    cells = [goal_cell]
    while cells[-1] != start_cell:
        cells.append(came_from[cells[-1]])
    cells.reverse()
    steps = [(b[0] - a[0], b[1] - a[1]) for a, b in zip(cells, cells[1:])]
    waypoints = tuple(grid.cell_center(cell) for cell in cells[1:])
    return Path(waypoints=waypoints, cost=_octile_cost(steps))


def follow_anchor(user: Pose, placement: "PlacementSpec") -> Vec3:
    """Placement offset rotated into the user's frame and added to their position."""
    dx, dz = placement.offset
    right = user.right()
    forward = user.forward()
    return Vec3(
        user.position.x + right.x * dx + forward.x * dz,
        user.position.y,
        user.position.z + right.z * dx + forward.z * dz,
    )


@dataclass(frozen=True)
class AdvanceResult:
    pose: Pose
    arrived: bool
    distance_moved: float
    remaining: Path


def _suffix_cost(points: tuple[Vec3, ...], eps: float = 1e-9) -> float:
    cost = 0.0
    for a, b in zip(points, points[1:]):
        diagonal = abs(b.x - a.x) > eps and abs(b.z - a.z) > eps
        cost += SQRT2 if diagonal else 1.0
    return cost


def advance(pose: Pose, path: Path, speed: float, dt: float) -> AdvanceResult:
    """Move at most speed*dt along the waypoint chain, clamping at the goal.

    Yaw turns to face the direction of travel. The returned remaining path
    holds the waypoints not yet consumed.
    """
    if speed <= 0.0 or dt <= 0.0:
        raise ValueError("speed and dt must be > 0")
    budget = speed * dt
    moved = 0.0
    pos = pose.position
    yaw = pose.yaw
    waypoints = list(path.waypoints)
    index = 0

    while budget > 0.0 and index < len(waypoints):
        target = waypoints[index]
        dx = target.x - pos.x
        dz = target.z - pos.z
        dist = math.hypot(dx, dz)
        if dist <= ARRIVAL_EPS:
            pos = target
            index += 1
            continue
        yaw = world_angle(dx, dz)
        if dist <= budget:
            pos = target
            moved += dist
            budget -= dist
            index += 1
        else:
            pos = Vec3(pos.x + dx / dist * budget, target.y, pos.z + dz / dist * budget)
            moved += budget
            budget = 0.0

    remaining_points = tuple(waypoints[index:])
    arrived = not remaining_points and (
        path.empty or pos.horizontal_distance(path.waypoints[-1]) <= ARRIVAL_EPS)
    remaining = Path(waypoints=remaining_points,
                     cost=_suffix_cost(remaining_points) if remaining_points else 0.0)
    return AdvanceResult(
        pose=Pose(position=pos, yaw=normalize_yaw(yaw)),
        arrived=arrived,
        distance_moved=moved,
        remaining=remaining,
    )
