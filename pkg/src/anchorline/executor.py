"""Mission execution: relocalize, navigate, capture, branch, report.

An Execution owns one robot and one event log. Mission runs localize to
the mission's anchors once at start from a few seeded probe poses,
reconstruct waypoint world poses through the transform tree, then walk
the graph; branching follows the waypoint's strategy. Ad-hoc goal
commands (from gestures or the UI) drive the same robot outside missions.

All mutating calls are serialized on one lock, so concurrent callers see
effects in arrival order; the event log may be read at any offset.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import nav
from .anchors import AnchorStore, LocalizationResult, RelocModel, localize_to_frame, query
from .geometry import Pose, TransformTree, compose, wrap_angle
from .gestures.commands import Command, Goal, NoOp, Preempt
from .mission import Mission, MissionStore, UnknownMission
from .occupancy import CellState, OccupancyGrid, OutsideGrid


class ExecutorError(Exception):
    pass


class NotAwaitingBranch(ExecutorError):
    pass


class UnknownEdge(ExecutorError):
    pass


class CallbackMissing(ExecutorError):
    pass


class CallbackChoseUnknownEdge(ExecutorError):
    pass


class MissionActive(ExecutorError):
    pass


class Phase(Enum):
    IDLE = "idle"
    FETCHING = "fetching"
    LOCALIZING = "localizing"
    NAVIGATING = "navigating"
    INSPECTING = "inspecting"
    AWAITING_BRANCH = "awaiting_branch"
    PREEMPTED = "preempted"
    COMPLETED = "completed"
    FAILED = "failed"


#: phases in which a mission still holds the robot
MISSION_ACTIVE_PHASES = frozenset(
    {Phase.FETCHING, Phase.LOCALIZING, Phase.NAVIGATING, Phase.INSPECTING, Phase.AWAITING_BRANCH}
)
TERMINAL_PHASES = frozenset({Phase.PREEMPTED, Phase.COMPLETED, Phase.FAILED})


@dataclass(frozen=True)
class ExecutionState:
    phase: Phase
    node: str | None = None
    reason: str | None = None


@dataclass(frozen=True)
class ExecutionEvent:
    seq: int
    t: float
    kind: str
    payload: dict

    def to_wire(self) -> dict:
        return {"seq": self.seq, "t": self.t, "kind": self.kind, **self.payload}


@dataclass(frozen=True)
class InspectionCapture:
    waypoint_id: str
    x: float
    y: float
    yaw: float
    t: float


@dataclass(frozen=True)
class ExecutorConfig:
    speed: float = 1.0
    turn_rate: float = 2.0
    arrival_pos_tol: float = 0.1
    arrival_yaw_tol: float = 0.1
    max_steps: int = 1000
    probe_count: int = 8
    probe_step: float = 0.6


class EventLog:
    def __init__(self) -> None:
        self._events: list[ExecutionEvent] = []
        self._cond = threading.Condition()

    def append(self, kind: str, payload: dict) -> ExecutionEvent:
        with self._cond:
            event = ExecutionEvent(seq=len(self._events), t=time.time(), kind=kind, payload=payload)
            self._events.append(event)
            self._cond.notify_all()
            return event

    def since(self, seq: int) -> list[ExecutionEvent]:
        with self._cond:
            return self._events[seq:]

    def wait_since(self, seq: int, timeout: float) -> list[ExecutionEvent]:
        """Events at/after seq, blocking up to timeout when none are ready."""
        with self._cond:
            if len(self._events) <= seq:
                self._cond.wait(timeout)
            return self._events[seq:]

    def __len__(self) -> int:
        with self._cond:
            return len(self._events)


BranchCallback = Callable[[Sequence[InspectionCapture]], int]


def _probe_poses(start_pose: Pose, seed: int, count: int, step: float) -> list[Pose]:
    """The start pose plus a seeded outward scan pattern around it."""
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x9E3779B9])
    poses = [start_pose]
    for i in range(max(0, count - 1)):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        radius = step * (1.0 + 0.5 * i)
        offset = np.array([radius * np.cos(angle), radius * np.sin(angle), 0.0])
        poses.append(Pose(start_pose.t + offset, start_pose.q))
    return poses


class Execution:
    """A single robot execution handle; see module docstring."""

    def __init__(
        self,
        grid: OccupancyGrid,
        cfg: ExecutorConfig = ExecutorConfig(),
        start_pose: Pose | None = None,
        callbacks: Mapping[str, BranchCallback] | None = None,
    ):
        self.grid = grid
        self.cfg = cfg
        self.callbacks = dict(callbacks or {})
        self._lock = threading.RLock()
        self.events = EventLog()
        start_pose = start_pose or Pose.identity()
        self.start_pose = start_pose
        self.robot = nav.RobotState(
            x=float(start_pose.t[0]), y=float(start_pose.t[1]), yaw=start_pose.yaw
        )
        self.mission: Mission | None = None
        self.tree: TransformTree | None = None
        self.captures: list[InspectionCapture] = []
        self._targets: dict[str, tuple[float, float, float]] = {}
        self._polyline: np.ndarray | None = None
        self._target_yaw: float | None = None
        self._visits = 0
        self._state = ExecutionState(Phase.IDLE)

    # -- construction ---------------------------------------------------

    @classmethod
    def adhoc(
        cls,
        grid: OccupancyGrid,
        cfg: ExecutorConfig = ExecutorConfig(),
        start_pose: Pose | None = None,
    ) -> "Execution":
        """An idle robot with no mission, driven only by injected commands."""
        return cls(grid, cfg, start_pose)

    @classmethod
    def start(
        cls,
        store: MissionStore,
        anchors: AnchorStore,
        grid: OccupancyGrid,
        mission_id: str,
        model: RelocModel,
        cfg: ExecutorConfig = ExecutorConfig(),
        start_pose: Pose | None = None,
        callbacks: Mapping[str, BranchCallback] | None = None,
    ) -> "Execution":
        """Fetch, localize, and begin executing a stored mission."""
        ex = cls(grid, cfg, start_pose, callbacks)
        ex._start_mission(store, anchors, mission_id, model)
        return ex

    def _start_mission(
        self, store: MissionStore, anchors: AnchorStore, mission_id: str, model: RelocModel
    ) -> None:
        with self._lock:
            self._set_state(ExecutionState(Phase.FETCHING))
            self.mission = store.load(mission_id)  # raises UnknownMission
            self._set_state(ExecutionState(Phase.LOCALIZING))
            tree = TransformTree()
            tree.add_root("map")
            probes = _probe_poses(
                self.start_pose, model.seed, self.cfg.probe_count, self.cfg.probe_step
            )
            for i, probe in enumerate(probes):
                tree.add_frame("map", f"probe-{i}", probe)
            best: dict[str, tuple[LocalizationResult, str]] = {}
            for anchor_id in self.mission.anchor_ids:
                if anchor_id not in anchors:
                    continue
                for i, probe in enumerate(probes):
                    result = query(anchors, anchor_id, probe, model)
                    if result is None:
                        continue
                    if anchor_id not in best or result.confidence > best[anchor_id][0].confidence:
                        best[anchor_id] = (result, f"probe-{i}")
            for result, frame in best.values():
                localize_to_frame(tree, result, frame)
            self.tree = tree
            unreachable = [
                wp.id for wp in self.mission.waypoints if wp.anchor_id not in best
            ]
            if unreachable:
                self._fail(f"AnchorUnreachable: waypoints {unreachable} have no localized anchor")
                return
            for wp in self.mission.waypoints:
                anchor_in_map = tree.lookup("map", wp.anchor_id)
                world = compose(anchor_in_map, wp.local_pose)
                self._targets[wp.id] = (float(world.t[0]), float(world.t[1]), world.yaw)
            self._begin_leg(self.mission.start)

    # -- state helpers ----------------------------------------------------

    @property
    def state(self) -> ExecutionState:
        with self._lock:
            return self._state

    def _emit(self, kind: str, payload: dict) -> None:
        self.events.append(kind, payload)

    def _set_state(self, state: ExecutionState) -> None:
        self._state = state
        self._emit(
            "StateChanged",
            {"phase": state.phase.value, "node": state.node, "reason": state.reason},
        )

    def _fail(self, reason: str) -> None:
        self._emit("Error", {"error": reason})
        self._set_state(ExecutionState(Phase.FAILED, reason=reason))

    def _emit_pose(self) -> None:
        self._emit("PoseUpdate", {"x": self.robot.x, "y": self.robot.y, "yaw": self.robot.yaw})

    def state_summary(self) -> dict:
        with self._lock:
            return {
                "phase": self._state.phase.value,
                "node": self._state.node,
                "reason": self._state.reason,
                "robot": {"x": self.robot.x, "y": self.robot.y, "yaw": self.robot.yaw},
                "captures": len(self.captures),
                "seq": len(self.events),
            }

    # -- mission walking --------------------------------------------------

    def _begin_leg(self, node: str | None, target: tuple[float, float, float] | None = None) -> None:
        """Plan and dispatch motion toward a waypoint or an ad-hoc target."""
        if target is None:
            assert node is not None
            target = self._targets[node]
        try:
            path = nav.plan(self.grid, (self.robot.x, self.robot.y), target[:2])
        except nav.PlanningError as exc:
            self._fail(f"{type(exc).__name__}: {exc}")
            return
        # approach the exact believed target, not just its cell center
        self._polyline = np.vstack([path.world_points, np.asarray(target[:2])])
        self._target_yaw = target[2]
        self.robot = nav.begin_motion(self.robot)
        self._emit(
            "PathPlanned",
            {
                "node": node,
                "cells": [list(c) for c in path.cells],
                "target": [target[0], target[1], target[2]],
            },
        )
        self._set_state(ExecutionState(Phase.NAVIGATING, node=node))

    def tick(self, dt: float) -> ExecutionState:
        """Advance simulation time; multiple transitions may fire per tick."""
        with self._lock:
            phase = self._state.phase
            if phase == Phase.NAVIGATING:
                assert self._polyline is not None and self._target_yaw is not None
                if self.robot.status == nav.Status.MOVING:
                    self.robot = nav.step(
                        self.robot, self._polyline, dt, self.cfg.speed, self.cfg.arrival_pos_tol
                    )
                    self._emit_pose()
                if self.robot.status == nav.Status.ARRIVED:
                    diff = wrap_angle(self._target_yaw - self.robot.yaw)
                    if abs(diff) > self.cfg.arrival_yaw_tol:
                        self.robot = nav.rotate_in_place(
                            self.robot,
                            self._target_yaw,
                            dt,
                            self.cfg.turn_rate,
                            self.cfg.arrival_yaw_tol,
                        )
                        self._emit_pose()
                    if abs(wrap_angle(self._target_yaw - self.robot.yaw)) <= self.cfg.arrival_yaw_tol:
                        self._arrive()
            elif phase == Phase.INSPECTING:
                self._advance_from(self._state.node)
            return self._state

    def _arrive(self) -> None:
        node = self._state.node
        self._visits += 1
        self._polyline = None
        if self.mission is None or node is None:
            self._set_state(ExecutionState(Phase.COMPLETED))
            return
        wp = self.mission.waypoint(node)
        if wp.is_inspection:
            capture = InspectionCapture(
                waypoint_id=node, x=self.robot.x, y=self.robot.y, yaw=self.robot.yaw, t=time.time()
            )
            self.captures.append(capture)
            self._emit(
                "CaptureTaken",
                {"waypoint": node, "x": capture.x, "y": capture.y, "yaw": capture.yaw},
            )
            self._set_state(ExecutionState(Phase.INSPECTING, node=node))
            return
        self._advance_from(node)

    def _advance_from(self, node: str) -> None:
        assert self.mission is not None
        edges = self.mission.out_edges(node)
        if not edges:
            self._set_state(ExecutionState(Phase.COMPLETED))
            return
        if self._visits >= self.cfg.max_steps:
            self._fail("StepBudget: node visit budget exhausted")
            return
        if len(edges) == 1:
            self._begin_leg(edges[0].dst)
            return
        strategy = self.mission.strategies[node]
        if strategy.kind == "first_edge":
            chosen = edges[0]
            self._emit("BranchResolved", {"node": node, "order": chosen.order, "to": chosen.dst})
            self._begin_leg(chosen.dst)
        elif strategy.kind == "interactive":
            self._set_state(ExecutionState(Phase.AWAITING_BRANCH, node=node))
            self._emit(
                "BranchRequested",
                {"node": node, "options": [{"order": e.order, "to": e.dst} for e in edges]},
            )
        else:  # callback
            fn = self.callbacks.get(strategy.name)
            if fn is None:
                self._fail(f"CallbackMissing: {strategy.name}")
                raise CallbackMissing(strategy.name)
            order = fn(tuple(self.captures))
            chosen = next((e for e in edges if e.order == order), None)
            if chosen is None:
                self._fail(f"CallbackChoseUnknownEdge: order {order} at {node}")
                raise CallbackChoseUnknownEdge(f"order {order} at {node}")
            self._emit("BranchResolved", {"node": node, "order": chosen.order, "to": chosen.dst})
            self._begin_leg(chosen.dst)

    # -- external control --------------------------------------------------

    def resolve_branch(self, node: str, order: int) -> ExecutionState:
        with self._lock:
            if self._state.phase != Phase.AWAITING_BRANCH or self._state.node != node:
                raise NotAwaitingBranch(node)
            assert self.mission is not None
            edges = self.mission.out_edges(node)
            chosen = next((e for e in edges if e.order == order), None)
            if chosen is None:
                raise UnknownEdge(f"order {order} at {node}")
            self._emit("BranchResolved", {"node": node, "order": chosen.order, "to": chosen.dst})
            self._begin_leg(chosen.dst)
            return self._state

    def preempt(self) -> ExecutionState:
        with self._lock:
            if self._state.phase in (Phase.COMPLETED, Phase.FAILED, Phase.PREEMPTED):
                return self._state
            self.robot = nav.preempt(self.robot)
            self._polyline = None
            self._set_state(ExecutionState(Phase.PREEMPTED))
            return self._state

    def inject_command(self, cmd: Command) -> ExecutionState:
        """Apply a gesture/UI command: ad-hoc Goal, Preempt, or NoOp."""
        with self._lock:
            if isinstance(cmd, NoOp):
                return self._state
            if isinstance(cmd, Preempt):
                return self.preempt()
            if not isinstance(cmd, Goal):
                raise TypeError(f"not a command: {cmd!r}")
            if self.mission is not None and self._state.phase in MISSION_ACTIVE_PHASES:
                raise MissionActive("a mission is executing; preempt it first")
            try:
                cell = self.grid.world_to_cell((cmd.x, cmd.y))
            except OutsideGrid:
                raise nav.GoalOutsideMap(f"({cmd.x}, {cmd.y})") from None
            if self.grid.state(*cell) != CellState.FREE:
                raise nav.GoalOccupied(str(cell))
            self._begin_leg(None, target=(cmd.x, cmd.y, cmd.yaw))
            return self._state

    # -- conveniences -------------------------------------------------------

    def run(
        self,
        dt: float = 0.05,
        max_ticks: int = 100_000,
        on_branch: Callable[[str, list[dict]], int] | None = None,
    ) -> ExecutionState:
        """Tick until a terminal state; optionally auto-answer branch requests."""
        for _ in range(max_ticks):
            state = self.state
            if state.phase in TERMINAL_PHASES:
                return state
            if state.phase == Phase.AWAITING_BRANCH:
                if on_branch is None:
                    return state
                assert self.mission is not None and state.node is not None
                options = [
                    {"order": e.order, "to": e.dst}
                    for e in self.mission.out_edges(state.node)
                ]
                self.resolve_branch(state.node, on_branch(state.node, options))
                continue
            self.tick(dt)
        return self.state


def visited_nodes(events: Iterable[ExecutionEvent]) -> list[str]:
    """Waypoints in arrival order, reconstructed from the event log."""
    nodes = []
    for event in events:
        if event.kind == "PathPlanned" and event.payload.get("node") is not None:
            nodes.append(event.payload["node"])
    return nodes
