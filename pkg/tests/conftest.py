"""Shared fixtures: an open demo world with a small branching mission,
plus plain-socket HTTP helpers for the service tests."""

from __future__ import annotations

import http.client
import json
import math
import time
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import pytest

from anchorline.anchors import AnchorPolicy, AnchorStore, RelocModel
from anchorline.geometry import Pose
from anchorline.mission import (
    INTERACTIVE,
    Mission,
    MissionStore,
    add_waypoint,
    connect,
    new_mission,
    with_strategy,
)
from anchorline.occupancy import OccupancyGrid, empty_grid, save_grid
from anchorline.service import ApiConfig, start_background

# 5 waypoints: w0 -> w1 -> w2 -> {w3 (order 0) | w4 (order 1)}, interactive
# branch at w2; w1 and w2 are inspection poses. Positions chosen so the
# mission spans three anchors while staying within relocalization range of
# the origin.
FIXTURE_WAYPOINTS = [
    # (x, y, yaw, is_inspection)
    (0.8, 0.0, 0.0, False),
    (1.6, 0.8, math.pi / 2, True),
    (2.4, 0.0, 0.0, True),
    (3.4, 1.2, math.pi / 2, False),
    (3.4, -1.4, -math.pi / 2, False),
]


@dataclass
class FixtureWorld:
    grid: OccupancyGrid
    anchors: AnchorStore
    missions: MissionStore
    mission: Mission
    mission_id: str
    targets: dict[str, tuple[float, float, float]]  # ground-truth world poses


def open_grid_8m() -> OccupancyGrid:
    return empty_grid([-4.0, -4.0], 0.1, 80, 80)


def build_fixture_mission(store: AnchorStore, seed: int = 0) -> tuple[Mission, dict]:
    rng = np.random.default_rng(seed)
    policy = AnchorPolicy(feature_count=8)
    m = new_mission("m-fixture")
    targets = {}
    wps = []
    for x, y, yaw, inspect in FIXTURE_WAYPOINTS:
        m, wp = add_waypoint(
            m, store, Pose.from_xyz_yaw(x, y, 0.0, yaw), is_inspection=inspect,
            policy=policy, rng=rng,
        )
        targets[wp.id] = (x, y, yaw)
        wps.append(wp)
    m = connect(m, wps[0].id, wps[1].id)
    m = connect(m, wps[1].id, wps[2].id)
    m = connect(m, wps[2].id, wps[3].id)
    m = connect(m, wps[2].id, wps[4].id)
    m = with_strategy(m, wps[2].id, INTERACTIVE)
    return m, targets


def make_fixture_world(tmp_dir, seed: int = 0, anchor_path=None) -> FixtureWorld:
    anchors = AnchorStore(anchor_path)
    mission, targets = build_fixture_mission(anchors, seed)
    missions = MissionStore(tmp_dir)
    mission_id = missions.save(mission)
    return FixtureWorld(
        grid=open_grid_8m(),
        anchors=anchors,
        missions=missions,
        mission=mission,
        mission_id=mission_id,
        targets=targets,
    )


@pytest.fixture
def fixture_world(tmp_path) -> FixtureWorld:
    return make_fixture_world(tmp_path / "missions")


# -- HTTP test plumbing ------------------------------------------------------


@pytest.fixture
def service_env(tmp_path):
    anchor_path = tmp_path / "anchors.json"
    world = make_fixture_world(tmp_path / "missions", anchor_path=anchor_path)
    grid_path = tmp_path / "map.grid.json"
    save_grid(world.grid, grid_path)
    cfg = ApiConfig(
        mission_dir=str(tmp_path / "missions"),
        anchor_path=str(anchor_path),
        grid_path=str(grid_path),
        port=0,
        reloc=RelocModel(sigma_t0=0.0, sigma_r0=0.0, seed=1),
        tick_dt=0.05,
        tick_interval=0.0005,
    )
    server, thread, base_url = start_background(cfg)
    host, port = server.server_address[:2]
    env = SimpleNamespace(world=world, server=server, host=host, port=port, tmp=tmp_path)
    try:
        yield env
    finally:
        server.shutdown()
        server.server_close()


def request(env, method, path, body=None):
    conn = http.client.HTTPConnection(env.host, env.port, timeout=10)
    payload = json.dumps(body).encode() if body is not None else None
    headers = {"Content-Type": "application/json"} if payload else {}
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    raw = resp.read()
    conn.close()
    return resp.status, raw


def request_json(env, method, path, body=None):
    status, raw = request(env, method, path, body)
    return status, json.loads(raw) if raw else None


def read_stream_lines(env, exec_id, from_seq=0, stop_after=None, timeout=10.0):
    """Read NDJSON events; optionally drop the connection after N lines."""
    conn = http.client.HTTPConnection(env.host, env.port, timeout=timeout)
    conn.request("GET", f"/executions/{exec_id}/events?from={from_seq}")
    resp = conn.getresponse()
    assert resp.status == 200
    assert resp.headers["Content-Type"] == "application/x-ndjson"
    events = []
    deadline = time.time() + timeout
    while time.time() < deadline:
        line = resp.readline()
        if not line:
            break
        events.append(json.loads(line))
        if stop_after is not None and len(events) >= stop_after:
            break
    conn.close()  # forced disconnect when stop_after cut the read short
    return events


def wait_for_phase(env, exec_id, phases, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        _, summary = request_json(env, "GET", f"/executions/{exec_id}")
        if summary["phase"] in phases:
            return summary
        time.sleep(0.02)
    raise AssertionError(f"execution never reached {phases}")
