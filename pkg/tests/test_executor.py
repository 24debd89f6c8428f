import math

import numpy as np
import pytest

from anchorline.anchors import AnchorStore, RelocModel, create_anchor, query
from anchorline.executor import (
    CallbackChoseUnknownEdge,
    CallbackMissing,
    Execution,
    ExecutorConfig,
    MissionActive,
    NotAwaitingBranch,
    Phase,
    UnknownEdge,
    visited_nodes,
)
from anchorline.geometry import Pose, compose, invert, wrap_angle
from anchorline.gestures.commands import Goal, NoOp, Preempt, gesture_to_command
from anchorline.gestures.data import GestureLabel
from anchorline.mission import (
    MissionStore,
    UnknownMission,
    add_waypoint,
    callback_strategy,
    connect,
    new_mission,
    with_strategy,
)
from anchorline.nav import GoalOccupied, GoalOutsideMap
from anchorline.occupancy import CellState, empty_grid
from conftest import open_grid_8m

ZERO_NOISE = RelocModel(sigma_t0=0.0, sigma_r0=0.0, seed=1)


def run_fixture(world, model=ZERO_NOISE, branch_order=1, dt=0.05):
    ex = Execution.start(world.missions, world.anchors, world.grid, world.mission_id, model)
    state = ex.run(dt=dt, on_branch=lambda node, options: branch_order)
    return ex, state


def test_nominal_run_completes_with_expected_states(fixture_world):
    ex, state = run_fixture(fixture_world)
    assert state.phase == Phase.COMPLETED
    phases = [
        e.payload["phase"] for e in ex.events.since(0) if e.kind == "StateChanged"
    ]
    assert phases[0] == "fetching"
    assert phases[1] == "localizing"
    assert phases[-1] == "completed"
    # branch chose order 1: w0 -> w1 -> w2 -> w4
    assert visited_nodes(ex.events.since(0)) == ["wp-0", "wp-1", "wp-2", "wp-4"]


def test_visit_order_is_consistent_with_edges(fixture_world):
    ex, _ = run_fixture(fixture_world)
    m = fixture_world.mission
    visits = visited_nodes(ex.events.since(0))
    assert visits[0] == m.start
    edge_pairs = {(e.src, e.dst) for e in m.edges}
    for a, b in zip(visits, visits[1:]):
        assert (a, b) in edge_pairs


def test_exactly_one_capture_per_inspection_visit(fixture_world):
    ex, _ = run_fixture(fixture_world)
    captured = [e.payload["waypoint"] for e in ex.events.since(0) if e.kind == "CaptureTaken"]
    assert captured == ["wp-1", "wp-2"]
    assert len(ex.captures) == 2


def test_zero_noise_poses_match_ground_truth(fixture_world):
    ex, _ = run_fixture(fixture_world)
    # achieved pose of each inspection leg, plus the terminal robot pose
    for capture in ex.captures:
        x, y, yaw = fixture_world.targets[capture.waypoint_id]
        assert math.hypot(capture.x - x, capture.y - y) <= 0.1
        assert abs(wrap_angle(capture.yaw - yaw)) <= 0.1
    x, y, yaw = fixture_world.targets["wp-4"]
    assert math.hypot(ex.robot.x - x, ex.robot.y - y) <= 0.1
    assert abs(wrap_angle(ex.robot.yaw - yaw)) <= 0.1


def test_noisy_runs_stay_within_tolerance(fixture_world):
    for seed in range(5):
        model = RelocModel(sigma_t0=0.01, sigma_r0=0.01, seed=seed)
        ex, state = run_fixture(fixture_world, model=model)
        assert state.phase == Phase.COMPLETED
        for capture in ex.captures:
            x, y, _ = fixture_world.targets[capture.waypoint_id]
            assert math.hypot(capture.x - x, capture.y - y) <= 0.15


def test_interactive_branch_waits_and_resolves(fixture_world):
    w = fixture_world
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    state = ex.run(dt=0.05)  # no branch handler: parks at the branch
    assert state.phase == Phase.AWAITING_BRANCH and state.node == "wp-2"
    requests = [e for e in ex.events.since(0) if e.kind == "BranchRequested"]
    assert len(requests) == 1
    assert requests[0].payload["options"] == [
        {"order": 0, "to": "wp-3"},
        {"order": 1, "to": "wp-4"},
    ]
    with pytest.raises(UnknownEdge):
        ex.resolve_branch("wp-2", 7)
    assert ex.state.phase == Phase.AWAITING_BRANCH  # unchanged on bad order
    state = ex.resolve_branch("wp-2", 0)
    assert state.phase == Phase.NAVIGATING and state.node == "wp-3"
    resolved = [e for e in ex.events.since(0) if e.kind == "BranchResolved"]
    assert resolved[-1].payload == {"node": "wp-2", "order": 0, "to": "wp-3"}
    assert ex.run(dt=0.05).phase == Phase.COMPLETED


def test_resolve_branch_outside_waiting_state(fixture_world):
    w = fixture_world
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    with pytest.raises(NotAwaitingBranch):
        ex.resolve_branch("wp-2", 0)


def linear_two_node_world(tmp_path, cyclic=False):
    anchors = AnchorStore()
    rng = np.random.default_rng(0)
    m = new_mission("m-two")
    m, a = add_waypoint(m, anchors, Pose.from_xyz_yaw(0.5, 0.0), rng=rng)
    m, b = add_waypoint(m, anchors, Pose.from_xyz_yaw(1.5, 0.0), rng=rng)
    m = connect(m, a.id, b.id)
    if cyclic:
        m = connect(m, b.id, a.id)
    store = MissionStore(tmp_path / "missions")
    store.save(m)
    return store, anchors, m


def test_cycle_hits_step_budget(tmp_path):
    store, anchors, m = linear_two_node_world(tmp_path, cyclic=True)
    ex = Execution.start(
        store, anchors, open_grid_8m(), m.id, ZERO_NOISE, cfg=ExecutorConfig(max_steps=10)
    )
    state = ex.run(dt=0.1)
    assert state.phase == Phase.FAILED
    assert "StepBudget" in state.reason
    dispatches = [e for e in ex.events.since(0) if e.kind == "PathPlanned"]
    assert len(dispatches) == 10  # ten visits, then the budget trips


def test_first_edge_strategy_takes_lowest_order(fixture_world):
    w = fixture_world
    from anchorline.mission import FIRST_EDGE

    m = with_strategy(w.mission, "wp-2", FIRST_EDGE)
    w.missions.save(m)
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    state = ex.run(dt=0.05)
    assert state.phase == Phase.COMPLETED
    assert visited_nodes(ex.events.since(0))[-1] == "wp-3"


def test_callback_strategy_selects_edge(fixture_world):
    w = fixture_world
    m = with_strategy(w.mission, "wp-2", callback_strategy("inspector"))
    w.missions.save(m)

    def choose(captures):
        assert len(captures) == 2  # both inspections happened before the branch
        return 1

    ex = Execution.start(
        w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE,
        callbacks={"inspector": choose},
    )
    state = ex.run(dt=0.05)
    assert state.phase == Phase.COMPLETED
    assert visited_nodes(ex.events.since(0))[-1] == "wp-4"


def test_callback_missing_fails(fixture_world):
    w = fixture_world
    m = with_strategy(w.mission, "wp-2", callback_strategy("nope"))
    w.missions.save(m)
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    with pytest.raises(CallbackMissing):
        ex.run(dt=0.05)
    assert ex.state.phase == Phase.FAILED


def test_callback_unknown_edge_fails(fixture_world):
    w = fixture_world
    m = with_strategy(w.mission, "wp-2", callback_strategy("bad"))
    w.missions.save(m)
    ex = Execution.start(
        w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE,
        callbacks={"bad": lambda captures: 99},
    )
    with pytest.raises(CallbackChoseUnknownEdge):
        ex.run(dt=0.05)
    assert ex.state.phase == Phase.FAILED


def test_unreachable_anchor_fails(fixture_world):
    w = fixture_world
    short_range = RelocModel(sigma_t0=0.0, sigma_r0=0.0, degrade_onset=0.3, cutoff=0.6, seed=2)
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, short_range)
    assert ex.state.phase == Phase.FAILED
    assert "AnchorUnreachable" in ex.state.reason


def test_unknown_mission_raises(fixture_world):
    w = fixture_world
    with pytest.raises(UnknownMission):
        Execution.start(w.missions, w.anchors, w.grid, "m-ghost", ZERO_NOISE)


def test_preempt_during_navigation(fixture_world):
    w = fixture_world
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    ex.tick(0.05)
    assert ex.state.phase == Phase.NAVIGATING
    state = ex.preempt()
    assert state.phase == Phase.PREEMPTED
    pose = (ex.robot.x, ex.robot.y)
    seq = len(ex.events)
    for _ in range(5):
        ex.tick(0.05)
    assert (ex.robot.x, ex.robot.y) == pose
    assert len(ex.events) == seq  # no further events after preempt
    assert ex.preempt().phase == Phase.PREEMPTED  # idempotent


def test_preempt_during_awaiting_branch(fixture_world):
    w = fixture_world
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    ex.run(dt=0.05)
    assert ex.state.phase == Phase.AWAITING_BRANCH
    assert ex.preempt().phase == Phase.PREEMPTED


def test_preempt_after_completed_is_absorbing(fixture_world):
    ex, state = run_fixture(fixture_world)
    assert state.phase == Phase.COMPLETED
    assert ex.preempt().phase == Phase.COMPLETED


def test_adhoc_goal_navigates_to_target():
    ex = Execution.adhoc(open_grid_8m())
    state = ex.inject_command(Goal(2.0, 0.0, 0.0))
    assert state.phase == Phase.NAVIGATING
    state = ex.run(dt=0.05)
    assert state.phase == Phase.COMPLETED
    assert math.hypot(ex.robot.x - 2.0, ex.robot.y - 0.0) <= 0.1


def test_adhoc_goal_validation():
    grid = empty_grid([-4.0, -4.0], 0.1, 80, 80)
    grid.cells[60, 40] = CellState.OCCUPIED  # world (2.0, 0.0)
    ex = Execution.adhoc(grid)
    with pytest.raises(GoalOccupied):
        ex.inject_command(Goal(2.0, 0.0, 0.0))
    with pytest.raises(GoalOutsideMap):
        ex.inject_command(Goal(50.0, 0.0, 0.0))
    assert ex.inject_command(NoOp()).phase == Phase.IDLE
    assert ex.inject_command(Preempt()).phase == Phase.PREEMPTED


def test_goal_rejected_while_mission_active(fixture_world):
    w = fixture_world
    ex = Execution.start(w.missions, w.anchors, w.grid, w.mission_id, ZERO_NOISE)
    with pytest.raises(MissionActive):
        ex.inject_command(Goal(1.0, 1.0, 0.0))
    ex.preempt()
    state = ex.inject_command(Goal(1.0, 1.0, 0.0))  # allowed once preempted
    assert state.phase == Phase.NAVIGATING


def test_event_log_is_gap_free_and_replayable(fixture_world):
    ex, _ = run_fixture(fixture_world)
    events = ex.events.since(0)
    assert [e.seq for e in events] == list(range(len(events)))
    replayed = [
        (e.payload["phase"], e.payload["node"])
        for e in events
        if e.kind == "StateChanged"
    ]
    assert replayed[-1] == ("completed", None)
    # monotone timestamps
    times = [e.t for e in events]
    assert all(b >= a for a, b in zip(times, times[1:]))


def test_capture_poses_respect_arrival_tolerances(fixture_world):
    ex, _ = run_fixture(fixture_world)
    for capture in ex.captures:
        x, y, yaw = fixture_world.targets[capture.waypoint_id]
        assert math.hypot(capture.x - x, capture.y - y) <= 0.1
        assert abs(wrap_angle(capture.yaw - yaw)) <= 0.1


def test_come_here_end_to_end_with_colocalization():
    """Headset localizes via an anchor; its goal lands in front of its true
    pose and the robot drives there."""
    anchors = AnchorStore()
    anchor = create_anchor(
        anchors, Pose.from_xyz_yaw(1.0, 0.5, 0.0, 0.3), rng=np.random.default_rng(0)
    )
    headset_truth = Pose.from_xyz_yaw(2.0, -1.0, 1.6, yaw=math.pi)
    result = query(anchors, anchor.id, headset_truth, ZERO_NOISE)
    # headset pose estimated through the anchor (robot knows anchor in map)
    headset_estimate = compose(anchor.world_pose, invert(result.anchor_in_query))
    cmd = gesture_to_command(GestureLabel.COME_HERE, headset_estimate, [2.0, -1.0, 1.4])
    expected = headset_truth.t[:2] + np.array([-1.5, 0.0])  # facing -X
    assert np.allclose([cmd.x, cmd.y], expected, atol=1e-6)
    ex = Execution.adhoc(open_grid_8m())
    ex.inject_command(cmd)
    state = ex.run(dt=0.05)
    assert state.phase == Phase.COMPLETED
    assert math.hypot(ex.robot.x - cmd.x, ex.robot.y - cmd.y) <= 0.1
