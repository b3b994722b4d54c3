"""Planner tests, checked against an independent uniform-cost-search oracle.

The oracle shares nothing with the implementation: it enumerates neighbors
itself and tracks (straight, diagonal) step counts per node so the optimal
cost can be reconstructed as s + d*sqrt(2) exactly. Because sqrt(2) is
irrational, every optimal path between two cells has the same step counts,
so implementation and oracle must agree bit-for-bit.
"""

import heapq
import math
import random

import pytest

from vrguide.errors import InvalidEndpoint, Unreachable
from vrguide.pathfinding import Path, advance, follow_anchor, plan_path
from vrguide.personas import get_persona
from vrguide.scene import Pose, Vec3, WalkGrid

SQRT2 = math.sqrt(2.0)


def make_grid(width, height, blocked=()):
    return WalkGrid(origin=Vec3(0.0, 0.0, 0.0), cell_size=1.0,
                    width=width, height=height, blocked=frozenset(blocked))


def center(grid, cell):
    return grid.cell_center(cell)


def dijkstra_cost(grid, start, goal):
    """Oracle: optimal octile cost from start to goal, or None if unreachable."""

    def open_cell(cell):
        col, row = cell
        return (0 <= col < grid.width and 0 <= row < grid.height
                and cell not in grid.blocked)

    def moves(cell):
        col, row = cell
        for dc in (-1, 0, 1):
            for dr in (-1, 0, 1):
                if dc == 0 and dr == 0:
                    continue
                nxt = (col + dc, row + dr)
                if not open_cell(nxt):
                    continue
                if dc != 0 and dr != 0:
                    if not (open_cell((col + dc, row)) and open_cell((col, row + dr))):
                        continue
                    yield nxt, 0, 1
                else:
                    yield nxt, 1, 0

    best: dict[tuple[int, int], tuple[int, int]] = {start: (0, 0)}
    heap = [(0.0, start[1], start[0], 0, 0)]
    settled = set()
    while heap:
        _, row, col, s, d = heapq.heappop(heap)
        cell = (col, row)
        if cell in settled:
            continue
        settled.add(cell)
        if cell == goal:
            return s * 1.0 + d * SQRT2
        for nxt, ds, dd in moves(cell):
            cand = (s + ds, d + dd)
            prev = best.get(nxt)
            if prev is None or cand[0] + cand[1] * SQRT2 < prev[0] + prev[1] * SQRT2:
                best[nxt] = cand
                heapq.heappush(heap, (cand[0] + cand[1] * SQRT2, nxt[1], nxt[0],
                                      cand[0], cand[1]))
    return None


def path_cells(grid, start_point, path):
    cells = [grid.cell_of(start_point)]
    for wp in path.waypoints:
        cells.append(grid.cell_of(wp))
    return cells


def test_straight_line():
    grid = make_grid(10, 10)
    path = plan_path(grid, center(grid, (0, 0)), center(grid, (5, 0)))
    assert path.cost == 5.0
    assert [grid.cell_of(w) for w in path.waypoints] == [(i, 0) for i in range(1, 6)]


def test_pure_diagonal():
    grid = make_grid(10, 10)
    path = plan_path(grid, center(grid, (0, 0)), center(grid, (4, 4)))
    assert path.cost == 4 * SQRT2
    assert [grid.cell_of(w) for w in path.waypoints] == [(i, i) for i in range(1, 5)]


def test_start_equals_goal():
    grid = make_grid(4, 4)
    path = plan_path(grid, center(grid, (2, 2)), Vec3(2.9, 0.0, 2.9))
    assert path == Path(waypoints=(), cost=0.0)


def test_blocked_endpoints_rejected():
    grid = make_grid(4, 4, blocked={(1, 1)})
    with pytest.raises(InvalidEndpoint):
        plan_path(grid, center(grid, (1, 1)), center(grid, (0, 0)))
    with pytest.raises(InvalidEndpoint):
        plan_path(grid, center(grid, (0, 0)), center(grid, (1, 1)))
    with pytest.raises(InvalidEndpoint):
        plan_path(grid, Vec3(-5.0, 0.0, 0.0), center(grid, (0, 0)))


def test_unreachable_raises():
    wall = {(2, r) for r in range(4)}
    grid = make_grid(5, 4, wall)
    with pytest.raises(Unreachable):
        plan_path(grid, center(grid, (0, 0)), center(grid, (4, 0)))


def test_no_corner_cutting_around_single_block():
    # Diagonal from (0,0) to (1,1) must not slip between (1,0) and (0,1).
    grid = make_grid(3, 3, blocked={(1, 0)})
    path = plan_path(grid, center(grid, (0, 0)), center(grid, (1, 1)))
    cells = path_cells(grid, center(grid, (0, 0)), path)
    assert cells == [(0, 0), (0, 1), (1, 1)]
    assert path.cost == 2.0


def test_detour_costs_match_oracle():
    wall = {(3, r) for r in range(1, 6)}
    grid = make_grid(7, 7, wall)
    start, goal = center(grid, (0, 3)), center(grid, (6, 3))
    path = plan_path(grid, start, goal)
    assert path.cost == dijkstra_cost(grid, (0, 3), (6, 3))


def test_deterministic_tie_break():
    grid = make_grid(8, 8)
    a = plan_path(grid, center(grid, (0, 0)), center(grid, (7, 3)))
    b = plan_path(grid, center(grid, (0, 0)), center(grid, (7, 3)))
    assert a.waypoints == b.waypoints
    assert a.cost == b.cost


def test_random_grids_match_oracle():
    rng = random.Random(2024)
    for _ in range(40):
        blocked = {(c, r) for c in range(20) for r in range(20)
                   if rng.random() < 0.3}
        grid = make_grid(20, 20, blocked)
        open_cells = [(c, r) for c in range(20) for r in range(20)
                      if (c, r) not in blocked]
        start = rng.choice(open_cells)
        goal = rng.choice(open_cells)
        expected = dijkstra_cost(grid, start, goal)
        if expected is None:
            with pytest.raises(Unreachable):
                plan_path(grid, center(grid, start), center(grid, goal))
            continue
        path = plan_path(grid, center(grid, start), center(grid, goal))
        assert path.cost == expected
        # Every step must be a legal move: adjacent, walkable, no cut corners.
        cells = path_cells(grid, center(grid, start), path)
        for (c0, r0), (c1, r1) in zip(cells, cells[1:]):
            dc, dr = c1 - c0, r1 - r0
            assert max(abs(dc), abs(dr)) == 1
            assert grid.walkable((c1, r1))
            if dc != 0 and dr != 0:
                assert grid.walkable((c0 + dc, r0))
                assert grid.walkable((c0, r0 + dr))


def test_advance_consumes_waypoints():
    grid = make_grid(10, 10)
    path = plan_path(grid, center(grid, (0, 0)), center(grid, (5, 0)))
    pose = Pose(position=center(grid, (0, 0)), yaw=0.0)
    result = advance(pose, path, speed=2.0, dt=1.0)
    assert not result.arrived
    assert result.distance_moved == pytest.approx(2.0)
    assert result.pose.position.x == pytest.approx(2.5)
    # Travel direction is +x, which is yaw pi/2.
    assert result.pose.yaw == pytest.approx(math.pi / 2)
    assert len(result.remaining.waypoints) == 3


def test_advance_clamps_at_goal():
    path = Path(waypoints=(Vec3(0.0, 0.0, 1.0),), cost=1.0)
    pose = Pose(position=Vec3(0.0, 0.0, 0.0), yaw=0.0)
    result = advance(pose, path, speed=1.0, dt=2.0)
    assert result.arrived
    assert result.distance_moved == pytest.approx(1.0)
    assert result.pose.position.z == pytest.approx(1.0)
    assert result.remaining.empty


def test_advance_whole_path_in_one_tick():
    grid = make_grid(10, 10)
    path = plan_path(grid, center(grid, (0, 0)), center(grid, (3, 3)))
    pose = Pose(position=center(grid, (0, 0)), yaw=0.0)
    result = advance(pose, path, speed=100.0, dt=1.0)
    assert result.arrived
    assert result.distance_moved == pytest.approx(3 * SQRT2)
    assert result.pose.position.horizontal_distance(center(grid, (3, 3))) < 1e-9


def test_advance_empty_path_is_arrived():
    pose = Pose(position=Vec3(1.0, 0.0, 1.0), yaw=0.5)
    result = advance(pose, Path(waypoints=(), cost=0.0), speed=1.0, dt=1.0)
    assert result.arrived
    assert result.distance_moved == 0.0
    assert result.pose == pose


def test_follow_anchor_rotates_offset():
    human = get_persona("human")
    # Facing +z: right is +x, so a (dx, dz) offset lands at (dx, dz) directly.
    user = Pose(position=Vec3(0.0, 0.0, 0.0), yaw=0.0)
    spot = follow_anchor(user, human.placement)
    dx, dz = human.placement.offset
    assert spot.x == pytest.approx(dx)
    assert spot.z == pytest.approx(dz)
    # Facing +x (yaw pi/2): forward is +x, right is -z.
    user = Pose(position=Vec3(0.0, 0.0, 0.0), yaw=math.pi / 2)
    spot = follow_anchor(user, human.placement)
    assert spot.x == pytest.approx(dz)
    assert spot.z == pytest.approx(-dx)
