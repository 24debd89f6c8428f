import json

import numpy as np

from anchorline.anchors import AnchorStore
from anchorline.geometry import Pose
from anchorline.mission import add_waypoint, new_mission, serialize
from conftest import read_stream_lines, request, request_json, wait_for_phase


def test_mission_crud_round_trip(service_env):
    env = service_env
    status, missions = request_json(env, "GET", "/missions")
    assert status == 200
    assert missions == [{"id": "m-fixture", "label": "m-fixture", "waypoint_count": 5}]

    # PUT a new mission, then GET must return byte-identical canonical JSON
    anchors = AnchorStore(env.tmp / "anchors.json")
    m = new_mission("m-extra")
    m, _ = add_waypoint(m, anchors, Pose.identity(), rng=np.random.default_rng(5))
    text = serialize(m)
    status, _ = request(env, "PUT", "/missions/m-extra", json.loads(text))
    assert status == 200
    status, raw = request(env, "GET", "/missions/m-extra")
    assert status == 200
    assert raw.decode() == text

    status, body = request_json(env, "DELETE", "/missions/m-extra")
    assert status == 200
    status, body = request_json(env, "GET", "/missions/m-extra")
    assert status == 404
    assert body["error"] == "UnknownMission"

    # empty store lists []
    request_json(env, "DELETE", "/missions/m-fixture")
    assert request_json(env, "GET", "/missions") == (200, [])


def test_put_rejects_invalid_documents(service_env):
    env = service_env
    status, body = request_json(env, "PUT", "/missions/m-bad", {"schema_version": 1})
    assert status == 422
    assert body["error"] == "MalformedDocument"

    doc = json.loads(serialize(env.world.mission))
    doc["edges"].append({"from": "wp-0", "to": "ghost", "order": 5})
    status, body = request_json(env, "PUT", "/missions/m-fixture", doc)
    assert status == 422
    assert body["error"] == "IntegrityViolation"

    # id mismatch between path and document
    good = json.loads(serialize(env.world.mission))
    status, body = request_json(env, "PUT", "/missions/other-id", good)
    assert status == 422


def test_get_map_returns_grid_document(service_env):
    status, raw = request(service_env, "GET", "/map")
    assert status == 200
    doc = json.loads(raw)
    assert doc["width"] == 80 and doc["height"] == 80
    assert len(doc["cells"]) == 80 * 80


def test_unknown_mission_execution_404(service_env):
    status, body = request_json(service_env, "POST", "/executions", {"mission_id": "m-ghost"})
    assert status == 404
    assert body["error"] == "UnknownMission"


def test_unknown_execution_404(service_env):
    status, body = request_json(service_env, "GET", "/executions/exec-99")
    assert status == 404


def test_full_mission_execution_over_http(service_env):
    env = service_env
    status, body = request_json(env, "POST", "/executions", {"mission_id": "m-fixture"})
    assert status == 201
    exec_id = body["execution_id"]

    summary = wait_for_phase(env, exec_id, {"awaiting_branch"})
    assert summary["node"] == "wp-2"

    # wrong-state and bad-order handling
    status, body = request_json(
        env, "POST", f"/executions/{exec_id}/branch", {"node": "wp-2", "order": 9}
    )
    assert status == 404 and body["error"] == "UnknownEdge"
    status, body = request_json(
        env, "POST", f"/executions/{exec_id}/command", {"kind": "goal", "x": 1.0, "y": 1.0}
    )
    assert status == 409 and body["error"] == "MissionActive"

    status, _ = request_json(
        env, "POST", f"/executions/{exec_id}/branch", {"node": "wp-2", "order": 1}
    )
    assert status == 200
    summary = wait_for_phase(env, exec_id, {"completed"})
    assert summary["captures"] == 2

    status, body = request_json(
        env, "POST", f"/executions/{exec_id}/branch", {"node": "wp-2", "order": 1}
    )
    assert status == 409 and body["error"] == "NotAwaitingBranch"

    events = read_stream_lines(env, exec_id)
    kinds = {e["kind"] for e in events}
    assert {"StateChanged", "PathPlanned", "PoseUpdate", "CaptureTaken",
            "BranchRequested", "BranchResolved"} <= kinds
    seqs = [e["seq"] for e in events]
    assert seqs == list(range(len(seqs)))


def test_event_stream_resumes_across_forced_disconnect(service_env):
    env = service_env
    _, body = request_json(env, "POST", "/executions", {"mission_id": "m-fixture"})
    exec_id = body["execution_id"]

    first = read_stream_lines(env, exec_id, from_seq=0, stop_after=5)
    assert len(first) == 5
    cursor = first[-1]["seq"] + 1

    # answer the branch so the run terminates and the stream can drain
    wait_for_phase(env, exec_id, {"awaiting_branch"})
    request_json(env, "POST", f"/executions/{exec_id}/branch", {"node": "wp-2", "order": 0})
    wait_for_phase(env, exec_id, {"completed"})

    rest = read_stream_lines(env, exec_id, from_seq=cursor)
    combined = [e["seq"] for e in first + rest]
    assert combined == list(range(len(combined)))  # no duplicates, no gaps

    replay = read_stream_lines(env, exec_id, from_seq=0)
    assert [e["seq"] for e in replay] == combined
    assert replay[:5] == first


def test_preempt_endpoint(service_env):
    env = service_env
    _, body = request_json(env, "POST", "/executions", {"mission_id": "m-fixture"})
    exec_id = body["execution_id"]
    status, summary = request_json(env, "POST", f"/executions/{exec_id}/preempt")
    assert status == 200
    assert summary["phase"] == "preempted"


def test_adhoc_goal_execution(service_env):
    env = service_env
    status, body = request_json(env, "POST", "/executions", {"mission_id": None})
    assert status == 201
    exec_id = body["execution_id"]
    _, summary = request_json(env, "GET", f"/executions/{exec_id}")
    assert summary["phase"] == "idle"

    status, body = request_json(
        env, "POST", f"/executions/{exec_id}/command", {"kind": "goal", "x": 50.0, "y": 0.0}
    )
    assert status == 422 and body["error"] == "GoalOutsideMap"

    status, _ = request_json(
        env, "POST", f"/executions/{exec_id}/command", {"kind": "goal", "x": 1.5, "y": 0.5}
    )
    assert status == 200
    summary = wait_for_phase(env, exec_id, {"completed"})
    assert abs(summary["robot"]["x"] - 1.5) <= 0.1
    assert abs(summary["robot"]["y"] - 0.5) <= 0.1

    status, _ = request_json(
        env, "POST", f"/executions/{exec_id}/command", {"kind": "preempt"}
    )
    assert status == 200


def test_malformed_bodies_rejected(service_env):
    env = service_env
    status, body = request_json(env, "POST", "/executions", {})
    assert status == 422 and body["error"] == "MalformedDocument"
    _, body = request_json(env, "POST", "/executions", {"mission_id": None})
    exec_id = body["execution_id"]
    status, body = request_json(
        env, "POST", f"/executions/{exec_id}/command", {"kind": "dance"}
    )
    assert status == 422
    status, body = request_json(
        env, "POST", f"/executions/{exec_id}/branch", {"node": 5, "order": "x"}
    )
    assert status == 422
