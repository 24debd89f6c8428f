"""Serializable anchor-relative waypoint graphs and their keyed store.

Missions are immutable snapshots: every edit returns a new Mission. The
JSON form is canonical (fixed key order, compact separators) so equal
missions serialize to identical bytes.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .anchors import (
    AnchorPolicy,
    AnchorStore,
    StoreWriteFailure,
    create_anchor,
    needs_new_anchor,
)
from .geometry import Pose, compose, invert, pose_from_wire, pose_to_wire

SCHEMA_VERSION = 1

# Creation-time slack on top of the anchor radius; revalidated on load.
ANCHOR_DISTANCE_SLACK = 0.5

STRATEGY_KINDS = ("first_edge", "interactive", "callback")


class MissionError(Exception):
    pass


class UnknownWaypoint(MissionError):
    pass


class DuplicateEdge(MissionError):
    pass


class SelfLoop(MissionError):
    pass


class MalformedDocument(MissionError):
    pass


class SchemaVersionUnsupported(MissionError):
    pass


class IntegrityViolation(MissionError):
    pass


class UnknownMission(KeyError):
    pass


@dataclass(frozen=True)
class Waypoint:
    id: str
    anchor_id: str
    local_pose: Pose
    is_inspection: bool = False
    label: str = ""


@dataclass(frozen=True)
class MissionEdge:
    src: str
    dst: str
    order: int


@dataclass(frozen=True)
class BranchStrategy:
    kind: str
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "callback" and not self.name:
            raise ValueError("callback strategy needs a name")


FIRST_EDGE = BranchStrategy("first_edge")
INTERACTIVE = BranchStrategy("interactive")


def callback_strategy(name: str) -> BranchStrategy:
    return BranchStrategy("callback", name)


@dataclass(frozen=True)
class Mission:
    id: str
    anchor_ids: tuple[str, ...] = ()
    waypoints: tuple[Waypoint, ...] = ()
    edges: tuple[MissionEdge, ...] = ()
    start: str | None = None
    strategies: Mapping[str, BranchStrategy] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def waypoint(self, wp_id: str) -> Waypoint:
        for wp in self.waypoints:
            if wp.id == wp_id:
                return wp
        raise UnknownWaypoint(wp_id)

    def out_edges(self, wp_id: str) -> list[MissionEdge]:
        return sorted((e for e in self.edges if e.src == wp_id), key=lambda e: e.order)


def new_mission(mission_id: str | None = None) -> Mission:
    return Mission(id=mission_id or f"m-{uuid.uuid4().hex[:12]}")


def add_waypoint(
    m: Mission,
    store: AnchorStore,
    world_pose: Pose,
    is_inspection: bool = False,
    policy: AnchorPolicy = AnchorPolicy(),
    label: str = "",
    rng: np.random.Generator | None = None,
) -> tuple[Mission, Waypoint]:
    """Add a waypoint, dropping a new anchor if none is close enough.

    The waypoint is attached to the nearest mission anchor (ties go to the
    earliest-created) and stores its pose in that anchor's frame.
    """
    anchors = [store.get(a) for a in m.anchor_ids]
    anchor_ids = m.anchor_ids
    if needs_new_anchor(anchors, world_pose.t, policy):
        created = create_anchor(store, world_pose, policy, rng=rng)
        anchors.append(created)
        anchor_ids = anchor_ids + (created.id,)
    dists = [float(np.linalg.norm(a.world_pose.t - world_pose.t)) for a in anchors]
    nearest = anchors[int(np.argmin(dists))]
    wp = Waypoint(
        id=f"wp-{len(m.waypoints)}",
        anchor_id=nearest.id,
        local_pose=compose(invert(nearest.world_pose), world_pose),
        is_inspection=is_inspection,
        label=label,
    )
    updated = replace(
        m,
        anchor_ids=anchor_ids,
        waypoints=m.waypoints + (wp,),
        start=m.start or wp.id,
    )
    return updated, wp


def connect(m: Mission, src: str, dst: str) -> Mission:
    """Append a directed edge with the next order rank among src's out-edges."""
    ids = {wp.id for wp in m.waypoints}
    for wp_id in (src, dst):
        if wp_id not in ids:
            raise UnknownWaypoint(wp_id)
    if src == dst:
        raise SelfLoop(src)
    existing = m.out_edges(src)
    if any(e.dst == dst for e in existing):
        raise DuplicateEdge(f"{src} -> {dst}")
    order = existing[-1].order + 1 if existing else 0
    return replace(m, edges=m.edges + (MissionEdge(src, dst, order),))


def with_strategy(m: Mission, wp_id: str, strategy: BranchStrategy) -> Mission:
    if wp_id not in {wp.id for wp in m.waypoints}:
        raise UnknownWaypoint(wp_id)
    strategies = dict(m.strategies)
    strategies[wp_id] = strategy
    return replace(m, strategies=strategies)


def with_start(m: Mission, wp_id: str) -> Mission:
    if wp_id not in {wp.id for wp in m.waypoints}:
        raise UnknownWaypoint(wp_id)
    return replace(m, start=wp_id)


def validate(m: Mission) -> None:
    """Check every structural invariant; raise IntegrityViolation otherwise."""
    if m.schema_version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(str(m.schema_version))
    if not m.id:
        raise IntegrityViolation("mission id must be non-empty")
    wp_ids = [wp.id for wp in m.waypoints]
    if len(set(wp_ids)) != len(wp_ids):
        raise IntegrityViolation("duplicate waypoint ids")
    if len(set(m.anchor_ids)) != len(m.anchor_ids):
        raise IntegrityViolation("duplicate anchor ids")
    known_anchors = set(m.anchor_ids)
    limit = AnchorPolicy().new_anchor_radius + ANCHOR_DISTANCE_SLACK
    for wp in m.waypoints:
        if wp.anchor_id not in known_anchors:
            raise IntegrityViolation(f"waypoint {wp.id} references unknown anchor {wp.anchor_id}")
        if float(np.linalg.norm(wp.local_pose.t)) > limit:
            raise IntegrityViolation(f"waypoint {wp.id} is too far from its anchor")
    known_wps = set(wp_ids)
    seen_pairs: set[tuple[str, str]] = set()
    seen_orders: set[tuple[str, int]] = set()
    for e in m.edges:
        if e.src not in known_wps or e.dst not in known_wps:
            raise IntegrityViolation(f"edge {e.src}->{e.dst} references unknown waypoint")
        if e.src == e.dst:
            raise IntegrityViolation(f"self-loop on {e.src}")
        if (e.src, e.dst) in seen_pairs:
            raise IntegrityViolation(f"duplicate edge {e.src}->{e.dst}")
        if (e.src, e.order) in seen_orders:
            raise IntegrityViolation(f"duplicate order {e.order} on {e.src}")
        seen_pairs.add((e.src, e.dst))
        seen_orders.add((e.src, e.order))
    if m.start is None or m.start not in known_wps:
        raise IntegrityViolation("start waypoint missing")
    reachable = {m.start}
    frontier = [m.start]
    while frontier:
        node = frontier.pop()
        for e in m.edges:
            if e.src == node and e.dst not in reachable:
                reachable.add(e.dst)
                frontier.append(e.dst)
    unreachable = known_wps - reachable
    if unreachable:
        raise IntegrityViolation(f"unreachable waypoints: {sorted(unreachable)}")
    for wp_id in known_wps:
        if len(m.out_edges(wp_id)) >= 2 and wp_id not in m.strategies:
            raise IntegrityViolation(f"branching waypoint {wp_id} has no strategy")
    for wp_id in m.strategies:
        if wp_id not in known_wps:
            raise IntegrityViolation(f"strategy for unknown waypoint {wp_id}")


def serialize(m: Mission) -> str:
    """Canonical JSON: fixed key order, compact separators, sorted strategies."""
    validate(m)
    doc = {
        "schema_version": m.schema_version,
        "id": m.id,
        "anchors": list(m.anchor_ids),
        "start": m.start,
        "waypoints": [
            {
                "id": wp.id,
                "anchor_id": wp.anchor_id,
                "local_pose": pose_to_wire(wp.local_pose),
                "is_inspection": wp.is_inspection,
                "label": wp.label,
            }
            for wp in m.waypoints
        ],
        "edges": [{"from": e.src, "to": e.dst, "order": e.order} for e in m.edges],
        "strategies": {
            wp_id: {"kind": s.kind, "name": s.name}
            for wp_id, s in sorted(m.strategies.items())
        },
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise MalformedDocument(message)


def deserialize(doc: str | bytes) -> Mission:
    """Parse and fully revalidate a mission document."""
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    _require(isinstance(data, dict), "document must be a JSON object")
    _require("schema_version" in data, "missing schema_version")
    version = data["schema_version"]
    _require(isinstance(version, int) and not isinstance(version, bool), "schema_version must be an integer")
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(str(version))
    for key, typ in (("id", str), ("anchors", list), ("waypoints", list), ("edges", list), ("strategies", dict)):
        _require(key in data, f"missing {key}")
        _require(isinstance(data[key], typ), f"{key} has the wrong type")
    _require(isinstance(data.get("start"), str), "start must be a string")
    waypoints = []
    for i, w in enumerate(data["waypoints"]):
        _require(isinstance(w, dict), f"waypoint {i} must be an object")
        for key, typ in (("id", str), ("anchor_id", str), ("is_inspection", bool), ("label", str)):
            _require(key in w, f"waypoint {i} missing {key}")
            _require(isinstance(w[key], typ), f"waypoint {i} field {key} has the wrong type")
        try:
            local = pose_from_wire(w.get("local_pose"))
        except ValueError as exc:
            raise MalformedDocument(f"waypoint {i}: {exc}") from exc
        waypoints.append(
            Waypoint(w["id"], w["anchor_id"], local, w["is_inspection"], w["label"])
        )
    edges = []
    for i, e in enumerate(data["edges"]):
        _require(isinstance(e, dict), f"edge {i} must be an object")
        for key in ("from", "to"):
            _require(isinstance(e.get(key), str), f"edge {i} field {key} must be a string")
        order = e.get("order")
        _require(isinstance(order, int) and not isinstance(order, bool), f"edge {i} order must be an integer")
        edges.append(MissionEdge(e["from"], e["to"], order))
    for a in data["anchors"]:
        _require(isinstance(a, str) and a, "anchor ids must be non-empty strings")
    strategies = {}
    for wp_id, s in data["strategies"].items():
        _require(isinstance(s, dict), f"strategy for {wp_id} must be an object")
        kind = s.get("kind")
        _require(kind in STRATEGY_KINDS, f"strategy for {wp_id} has unknown kind {kind!r}")
        name = s.get("name", "")
        _require(isinstance(name, str), f"strategy name for {wp_id} must be a string")
        try:
            strategies[wp_id] = BranchStrategy(kind, name)
        except ValueError as exc:
            raise MalformedDocument(str(exc)) from exc
    m = Mission(
        id=data["id"],
        anchor_ids=tuple(data["anchors"]),
        waypoints=tuple(waypoints),
        edges=tuple(edges),
        start=data["start"],
        strategies=strategies,
        schema_version=version,
    )
    validate(m)
    return m


class MissionStore:
    """One JSON file per mission under a directory; last write wins."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()

    def _path(self, mission_id: str) -> Path:
        return self.directory / f"{mission_id}.json"

    def save(self, m: Mission) -> str:
        text = serialize(m)
        with self._lock:
            tmp = self._path(m.id).with_suffix(".json.tmp")
            try:
                tmp.write_text(text, encoding="utf-8")
                tmp.replace(self._path(m.id))
            except OSError as exc:
                raise StoreWriteFailure(str(exc)) from exc
        return m.id

    def load(self, mission_id: str) -> Mission:
        path = self._path(mission_id)
        with self._lock:
            if not path.exists():
                raise UnknownMission(mission_id)
            return deserialize(path.read_text(encoding="utf-8"))

    def load_text(self, mission_id: str) -> str:
        path = self._path(mission_id)
        with self._lock:
            if not path.exists():
                raise UnknownMission(mission_id)
            return path.read_text(encoding="utf-8")

    def delete(self, mission_id: str) -> None:
        with self._lock:
            path = self._path(mission_id)
            if not path.exists():
                raise UnknownMission(mission_id)
            path.unlink()

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(p.stem for p in self.directory.glob("*.json"))
