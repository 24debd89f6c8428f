"""Turn recognized gestures into navigation commands.

All poses are expected in the shared map frame: colocalization is what
makes "come here" and "point" spatially meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..geometry import Pose, quat_rotate
from .data import GestureLabel


class RayParallelToGround(ValueError):
    pass


@dataclass(frozen=True)
class Goal:
    x: float
    y: float
    yaw: float


@dataclass(frozen=True)
class Preempt:
    pass


@dataclass(frozen=True)
class NoOp:
    pass


Command = Union[Goal, Preempt, NoOp]


@dataclass(frozen=True)
class CommandConfig:
    front_offset: float = 1.5  # "come here" standoff from the headset


def gesture_to_command(
    label: GestureLabel,
    headset_pose: Pose,
    hand_position,
    cfg: CommandConfig = CommandConfig(),
) -> Command:
    """Map a gesture to a command in the shared frame.

    STOP preempts. COME_HERE targets a point front_offset ahead of the
    headset (forward axis projected to XY), facing back at the user.
    POINT casts the headset->hand ray to the ground plane and targets the
    hit. BACKGROUND does nothing.
    """
    if label == GestureLabel.STOP:
        return Preempt()
    if label == GestureLabel.BACKGROUND:
        return NoOp()
    if label == GestureLabel.COME_HERE:
        forward = quat_rotate(headset_pose.q, np.array([1.0, 0.0, 0.0]))
        fxy = forward[:2]
        norm = float(np.hypot(fxy[0], fxy[1]))
        if norm < 1e-9:
            raise RayParallelToGround("headset forward axis has no horizontal component")
        direction = fxy / norm
        goal = headset_pose.t[:2] + cfg.front_offset * direction
        yaw = math.atan2(headset_pose.t[1] - goal[1], headset_pose.t[0] - goal[0])
        return Goal(float(goal[0]), float(goal[1]), yaw)
    # POINT: intersect the headset->hand ray with z = 0
    origin = headset_pose.t
    direction = np.asarray(hand_position, dtype=float) - origin
    if direction[2] >= -1e-12:
        raise RayParallelToGround("pointing ray does not descend toward the ground")
    t = -origin[2] / direction[2]
    if t <= 0:
        raise RayParallelToGround("pointing ray hits the ground behind the headset")
    hit = origin + t * direction
    return Goal(float(hit[0]), float(hit[1]), math.atan2(direction[1], direction[0]))
