"""Grid path planning and a kinematic differential robot simulator.

Planning is A* over 4-connected free cells with unit step cost and a
Manhattan heuristic; ties expand the lexicographically smaller (ix, iy)
first so plans are deterministic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .geometry import wrap_angle
from .occupancy import CellState, OccupancyGrid, OutsideGrid

ARRIVAL_POS_TOL = 0.1
ARRIVAL_YAW_TOL = 0.1


class PlanningError(Exception):
    pass


class StartOccupied(PlanningError):
    pass


class GoalOccupied(PlanningError):
    pass


class GoalOutsideMap(PlanningError):
    pass


class NoPath(PlanningError):
    pass


class Status(Enum):
    IDLE = "idle"
    MOVING = "moving"
    ARRIVED = "arrived"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class RobotState:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    speed: float = 0.0
    status: Status = Status.IDLE
    target_index: int = 0  # progress cursor along the active path polyline

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def pose2d(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.yaw)


@dataclass(frozen=True)
class GridPath:
    cells: tuple[tuple[int, int], ...]
    world_points: np.ndarray  # (N, 2) cell centers

    def __post_init__(self) -> None:
        pts = np.asarray(self.world_points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "world_points", pts)

    @property
    def end(self) -> np.ndarray:
        return self.world_points[-1]


def plan(grid: OccupancyGrid, start_xy, goal_xy) -> GridPath:
    """Shortest 4-connected path between the cells containing start and goal."""
    try:
        start = grid.world_to_cell(start_xy)
    except OutsideGrid:
        raise StartOccupied(f"start {tuple(start_xy)} is outside the grid") from None
    try:
        goal = grid.world_to_cell(goal_xy)
    except OutsideGrid:
        raise GoalOutsideMap(f"goal {tuple(goal_xy)} is outside the grid") from None
    if grid.state(*start) != CellState.FREE:
        raise StartOccupied(str(start))
    if grid.state(*goal) != CellState.FREE:
        raise GoalOccupied(str(goal))

    def heuristic(c: tuple[int, int]) -> int:
        return abs(c[0] - goal[0]) + abs(c[1] - goal[1])

    open_heap: list[tuple[int, int, int]] = [(heuristic(start), start[0], start[1])]
    g_score = {start: 0}
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()
    while open_heap:
        _, cx, cy = heapq.heappop(open_heap)
        current = (cx, cy)
        if current in closed:
            continue
        if current == goal:
            break
        closed.add(current)
        for dx, dy in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            nxt = (cx + dx, cy + dy)
            if not grid.in_bounds(*nxt) or grid.state(*nxt) != CellState.FREE:
                continue
            tentative = g_score[current] + 1
            if tentative < g_score.get(nxt, 1 << 60):
                g_score[nxt] = tentative
                came_from[nxt] = current
                heapq.heappush(open_heap, (tentative + heuristic(nxt), nxt[0], nxt[1]))
    if goal not in g_score:
        raise NoPath(f"{start} -> {goal}")
    cells = [goal]
    while cells[-1] != start:
        cells.append(came_from[cells[-1]])
    cells.reverse()
    points = np.array([grid.cell_to_world(ix, iy) for ix, iy in cells])
    return GridPath(cells=tuple(cells), world_points=points)


def step(
    state: RobotState,
    waypoints: np.ndarray,
    dt: float,
    v: float,
    arrive_tol: float = ARRIVAL_POS_TOL,
) -> RobotState:
    """Advance along a 2D polyline by v*dt, clamping at its end.

    waypoints is an (N, 2) array (a GridPath's world_points, possibly with
    an exact goal point appended). Idle robots stay put.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.status in (Status.IDLE, Status.ARRIVED):
        return state
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    pos = state.position
    yaw = state.yaw
    idx = min(state.target_index, len(pts))
    remaining = v * dt
    while remaining > 1e-12 and idx < len(pts):
        seg = pts[idx] - pos
        seg_len = float(np.hypot(seg[0], seg[1]))
        if seg_len <= 1e-12:
            idx += 1
            continue
        yaw = math.atan2(seg[1], seg[0])
        if seg_len <= remaining:
            pos = pts[idx].copy()
            remaining -= seg_len
            idx += 1
        else:
            pos = pos + seg * (remaining / seg_len)
            remaining = 0.0
    at_end = idx >= len(pts)
    dist_to_end = float(np.hypot(*(pts[-1] - pos)))
    arrived = at_end or dist_to_end <= arrive_tol
    return replace(
        state,
        x=float(pos[0]),
        y=float(pos[1]),
        yaw=wrap_angle(yaw),
        speed=0.0 if arrived else v,
        status=Status.ARRIVED if arrived else Status.MOVING,
        target_index=idx,
    )


def rotate_in_place(
    state: RobotState,
    target_yaw: float,
    dt: float,
    omega: float,
    tol: float = ARRIVAL_YAW_TOL,
) -> RobotState:
    """Turn toward target_yaw at rate omega, clamping at the target."""
    diff = wrap_angle(target_yaw - state.yaw)
    if abs(diff) <= tol:
        return replace(state, yaw=state.yaw, speed=0.0)
    turn = math.copysign(min(abs(diff), omega * dt), diff)
    return replace(state, yaw=wrap_angle(state.yaw + turn), speed=0.0)


def preempt(state: RobotState) -> RobotState:
    """Stop immediately; the caller discards the active path."""
    return replace(state, speed=0.0, status=Status.IDLE, target_index=0)


def begin_motion(state: RobotState) -> RobotState:
    return replace(state, status=Status.MOVING, target_index=0)
