"""Simulated cloud anchor service.

An anchor is a world-locked frame with a bundle of feature points sampled
around its creation viewpoint. Relocalization queries succeed with a
probability that degrades with distance and return the true relative pose
perturbed by seeded Gaussian noise, so every run is reproducible.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    FrameId,
    Pose,
    TransformTree,
    UnknownFrame,
    compose,
    invert,
    pose_from_wire,
    pose_to_wire,
    quat_from_rotvec,
    quat_mul,
)


class UnknownAnchor(KeyError):
    pass


class StoreWriteFailure(OSError):
    pass


@dataclass(frozen=True)
class AnchorPolicy:
    """When to drop a new anchor and how its feature bundle is sampled."""

    new_anchor_radius: float = 2.5
    feature_count: int = 200
    feature_radius: float = 3.0

    def __post_init__(self) -> None:
        if self.new_anchor_radius <= 0:
            raise ValueError("new_anchor_radius must be positive")
        if self.feature_count < 1:
            raise ValueError("feature_count must be >= 1")


@dataclass(frozen=True)
class RelocModel:
    """Distance-dependent recall and noise for relocalization queries."""

    sigma_t0: float = 0.01
    sigma_r0: float = 0.01
    degrade_onset: float = 4.0
    cutoff: float = 8.0
    min_visible_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0 < self.degrade_onset < self.cutoff):
            raise ValueError("need 0 < degrade_onset < cutoff")
        if self.sigma_t0 < 0 or self.sigma_r0 < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not (0 <= self.min_visible_fraction <= 1):
            raise ValueError("min_visible_fraction must be in [0, 1]")


@dataclass(frozen=True)
class Anchor:
    id: str
    world_pose: Pose
    feature_points: np.ndarray
    created_at: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.feature_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise ValueError("feature_points must be a non-empty (N, 3) array")
        pts.setflags(write=False)
        object.__setattr__(self, "feature_points", pts)


@dataclass(frozen=True)
class LocalizationResult:
    anchor_id: str
    anchor_in_query: Pose
    confidence: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must be in [0, 1]")


class AnchorStore:
    """Registry of anchors, optionally persisted to one JSON file.

    With path=None the store is memory-only (useful for simulations that
    do not need durability). Reads may run concurrently; writes and the
    query counter are serialized on an internal lock.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._anchors: dict[str, Anchor] = {}
        self._lock = threading.RLock()
        self._query_count = 0

    @classmethod
    def open(cls, path: str | os.PathLike) -> "AnchorStore":
        store = cls(path)
        p = Path(path)
        if p.exists():
            doc = json.loads(p.read_text(encoding="utf-8"))
            for entry in doc["anchors"]:
                anchor = Anchor(
                    id=entry["id"],
                    world_pose=pose_from_wire(entry["world_pose"]),
                    feature_points=np.array(entry["features"], dtype=float),
                    created_at=float(entry["created_at"]),
                )
                store._anchors[anchor.id] = anchor
        return store

    def add(self, anchor: Anchor) -> None:
        with self._lock:
            if anchor.id in self._anchors:
                raise ValueError(f"duplicate anchor id {anchor.id!r}")
            self._anchors[anchor.id] = anchor
            self._commit()

    def get(self, anchor_id: str) -> Anchor:
        with self._lock:
            try:
                return self._anchors[anchor_id]
            except KeyError:
                raise UnknownAnchor(anchor_id) from None

    def __contains__(self, anchor_id: str) -> bool:
        with self._lock:
            return anchor_id in self._anchors

    def __len__(self) -> int:
        with self._lock:
            return len(self._anchors)

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._anchors)

    def anchors(self) -> list[Anchor]:
        with self._lock:
            return list(self._anchors.values())

    def next_query_index(self) -> int:
        with self._lock:
            idx = self._query_count
            self._query_count += 1
            return idx

    def _commit(self) -> None:
        if self.path is None:
            return
        doc = {
            "anchors": [
                {
                    "id": a.id,
                    "world_pose": pose_to_wire(a.world_pose),
                    "features": [[float(v) for v in p] for p in a.feature_points],
                    "created_at": a.created_at,
                }
                for a in self._anchors.values()
            ]
        }
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        try:
            tmp.write_text(json.dumps(doc), encoding="utf-8")
            tmp.replace(self.path)
        except OSError as exc:
            raise StoreWriteFailure(str(exc)) from exc


def _sample_ball(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """Uniform points in a ball: random direction, radius ~ R * u^(1/3)."""
    directions = rng.normal(size=(count, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=count) ** (1.0 / 3.0)
    return directions * radii[:, None]


def create_anchor(
    store: AnchorStore,
    device_pose: Pose,
    policy: AnchorPolicy = AnchorPolicy(),
    rng: np.random.Generator | None = None,
    anchor_id: str | None = None,
) -> Anchor:
    """Create a world-locked anchor at the device pose and persist it."""
    if rng is None:
        rng = np.random.default_rng()
    points = device_pose.t + _sample_ball(rng, policy.feature_count, policy.feature_radius)
    anchor = Anchor(
        id=anchor_id or str(uuid.uuid4()),
        world_pose=device_pose,
        feature_points=points,
        created_at=time.time(),
    )
    store.add(anchor)
    return anchor


def needs_new_anchor(
    existing: Iterable[Anchor], device_pos: Sequence[float], policy: AnchorPolicy
) -> bool:
    """True when no existing anchor is within the creation radius."""
    pos = np.asarray(device_pos, dtype=float)
    best = min(
        (float(np.linalg.norm(a.world_pose.t - pos)) for a in existing),
        default=float("inf"),
    )
    return best > policy.new_anchor_radius


def recall_probability(distance: float, model: RelocModel) -> float:
    if distance <= model.degrade_onset:
        return 1.0
    if distance >= model.cutoff:
        return 0.0
    return (model.cutoff - distance) / (model.cutoff - model.degrade_onset)


def _query_rng(model: RelocModel, anchor_id: str, counter: int) -> np.random.Generator:
    return np.random.default_rng(
        [model.seed & 0xFFFFFFFF, zlib.crc32(anchor_id.encode("utf-8")), counter]
    )


def query(
    store: AnchorStore,
    anchor_id: str,
    device_pose: Pose,
    model: RelocModel,
) -> LocalizationResult | None:
    """Relocalize the device to an anchor; None models a failed query."""
    anchor = store.get(anchor_id)
    d = float(np.linalg.norm(device_pose.t - anchor.world_pose.t))
    p = recall_probability(d, model)
    if p <= 0.0:
        return None
    if model.min_visible_fraction > 0.0:
        dists = np.linalg.norm(anchor.feature_points - device_pose.t, axis=1)
        visible = float(np.mean(dists <= model.cutoff))
        if visible < model.min_visible_fraction:
            return None
    rng = _query_rng(model, anchor_id, store.next_query_index())
    if p < 1.0 and rng.uniform() > p:
        return None
    true_rel = compose(invert(device_pose), anchor.world_pose)
    excess = max(0.0, d - model.degrade_onset)
    sigma_t = model.sigma_t0 * (1.0 + excess)
    sigma_r = model.sigma_r0 * (1.0 + excess)
    noise_t = rng.normal(0.0, sigma_t, 3) if sigma_t > 0 else np.zeros(3)
    noisy = Pose(true_rel.t + noise_t, true_rel.q)
    if sigma_r > 0:
        noisy = Pose(noisy.t, quat_mul(quat_from_rotvec(rng.normal(0.0, sigma_r, 3)), noisy.q))
    return LocalizationResult(anchor_id=anchor_id, anchor_in_query=noisy, confidence=p)


def localize_to_frame(
    tree: TransformTree, result: LocalizationResult, device_frame: FrameId
) -> FrameId:
    """Insert the localized anchor frame under the device frame."""
    if not tree.has_frame(device_frame):
        raise UnknownFrame(device_frame)
    return tree.add_frame(device_frame, result.anchor_id, result.anchor_in_query)
