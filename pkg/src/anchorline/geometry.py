"""Rigid-body poses and a named-frame transform tree.

Conventions: quaternions are (w, x, y, z), right-handed, active rotations,
renormalized after every construction and multiply. Translations are meters.
Yaw is the heading of the rotated +X axis projected onto the XY plane.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

QUAT_NORM_TOL = 1e-9

FrameId = str


class UnknownFrame(KeyError):
    pass


class DisconnectedFrames(ValueError):
    pass


class DuplicateFrame(ValueError):
    pass


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v' = v + 2 w (u x v) + 2 u x (u x v), u = vector part
    u = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    t = 2.0 * np.cross(u, v)
    return v + q[0] * t + np.cross(u, t)


def quat_from_rotvec(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    angle = float(np.linalg.norm(r))
    if angle < 1e-12:
        q = np.array([1.0, 0.5 * r[0], 0.5 * r[1], 0.5 * r[2]])
        return q / np.linalg.norm(q)
    axis = r / angle
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis))


def quat_from_yaw(yaw: float) -> np.ndarray:
    return np.array([math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)])


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    # Shepperd's method: branch on the largest diagonal combination.
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return q / np.linalg.norm(q)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True, eq=False)
class Pose:
    """A rigid transform: rotate by q, then translate by t."""

    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self) -> None:
        t = np.array(self.t, dtype=float).reshape(3)
        q = np.array(self.q, dtype=float).reshape(4)
        if not (np.isfinite(t).all() and np.isfinite(q).all()):
            raise ValueError("pose components must be finite")
        norm = float(np.linalg.norm(q))
        if norm < 1e-6:
            raise ValueError("quaternion norm too small to normalize")
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            q = q / norm
        t.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "q", q)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.t, other.t) and np.array_equal(self.q, other.q)

    def __repr__(self) -> str:
        return f"Pose(t={self.t.tolist()}, q={self.q.tolist()})"

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_xyz_yaw(x: float, y: float, z: float = 0.0, yaw: float = 0.0) -> "Pose":
        return Pose(np.array([x, y, z]), quat_from_yaw(yaw))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = rotation_matrix(self.q)
        m[:3, 3] = self.t
        return m

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        return Pose(m[:3, 3].copy(), quat_from_matrix(m[:3, :3]))

    @property
    def yaw(self) -> float:
        fx = quat_rotate(self.q, np.array([1.0, 0.0, 0.0]))
        return math.atan2(fx[1], fx[0])


def compose(a: Pose, b: Pose) -> Pose:
    """The rigid map that applies b first, then a."""
    return Pose(a.t + quat_rotate(a.q, b.t), quat_mul(a.q, b.q))


def invert(p: Pose) -> Pose:
    qi = quat_conj(p.q)
    return Pose(-quat_rotate(qi, p.t), qi)


def transform_point(p: Pose, x: np.ndarray) -> np.ndarray:
    return p.t + quat_rotate(p.q, np.asarray(x, dtype=float))


def pose_close(a: Pose, b: Pose, tol: float = 1e-9) -> bool:
    """Approximate equality; quaternions compared up to sign."""
    dq = min(np.abs(a.q - b.q).max(), np.abs(a.q + b.q).max())
    return bool(np.abs(a.t - b.t).max() <= tol and dq <= tol)


def pose_to_wire(p: Pose) -> dict:
    return {"t": [float(v) for v in p.t], "q": [float(v) for v in p.q]}


def pose_from_wire(d: dict) -> Pose:
    if not isinstance(d, dict) or set(d) != {"t", "q"}:
        raise ValueError("pose wire form must be an object with keys 't' and 'q'")
    t, q = d["t"], d["q"]
    if not (isinstance(t, list) and len(t) == 3 and all(isinstance(v, (int, float)) for v in t)):
        raise ValueError("pose 't' must be a list of 3 numbers")
    if not (isinstance(q, list) and len(q) == 4 and all(isinstance(v, (int, float)) for v in q)):
        raise ValueError("pose 'q' must be a list of 4 numbers")
    if abs(math.sqrt(sum(v * v for v in q)) - 1.0) > 1e-6:
        raise ValueError("pose 'q' must be a unit quaternion")
    return Pose(np.array(t, dtype=float), np.array(q, dtype=float))


class TransformTree:
    """A forest of named frames; each child has exactly one parent edge.

    Thread-safe: mutation and lookup are serialized on an internal lock.
    """

    def __init__(self) -> None:
        self._parent: dict[FrameId, tuple[FrameId, Pose]] = {}
        self._frames: set[FrameId] = set()
        self._lock = threading.RLock()

    def add_root(self, frame: FrameId) -> FrameId:
        with self._lock:
            if not frame:
                raise ValueError("frame name must be non-empty")
            if frame in self._frames:
                raise DuplicateFrame(frame)
            self._frames.add(frame)
            return frame

    def add_frame(self, parent: FrameId, child: FrameId, transform: Pose) -> FrameId:
        """Attach child under parent; the transform is the child pose in parent."""
        with self._lock:
            if not child:
                raise ValueError("frame name must be non-empty")
            if child in self._frames:
                raise DuplicateFrame(child)
            if parent not in self._frames:
                self._frames.add(parent)
            self._frames.add(child)
            self._parent[child] = (parent, transform)
            return child

    def has_frame(self, frame: FrameId) -> bool:
        with self._lock:
            return frame in self._frames

    def frames(self) -> list[FrameId]:
        with self._lock:
            return sorted(self._frames)

    def _root_chain(self, frame: FrameId) -> tuple[FrameId, Pose]:
        # Pose of `frame` expressed in its root.
        pose = Pose.identity()
        cur = frame
        while cur in self._parent:
            parent, edge = self._parent[cur]
            pose = compose(edge, pose)
            cur = parent
        return cur, pose

    def lookup(self, frm: FrameId, to: FrameId) -> Pose:
        """Pose of frame `to` expressed in frame `frm`."""
        with self._lock:
            for f in (frm, to):
                if f not in self._frames:
                    raise UnknownFrame(f)
            root_a, pose_a = self._root_chain(frm)
            root_b, pose_b = self._root_chain(to)
            if root_a != root_b:
                raise DisconnectedFrames(f"{frm!r} and {to!r} are in different trees")
            return compose(invert(pose_a), pose_b)
