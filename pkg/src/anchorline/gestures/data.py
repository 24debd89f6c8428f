"""Gesture data: flexion frames, sliding windows, and synthetic recordings.

Each hand frame carries 19 joint flexion angles (3 thumb joints plus 4
joints for each of the 4 fingers). Classification runs on sliding windows
of 12 consecutive frames, flattened time-major into a 228-vector.

Real recordings are unavailable, so a generator mirrors the collection
protocol: a few synthetic subjects perform each gesture a couple of times,
with per-subject amplitude/tempo warps, joint offsets, and noise.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

JOINT_COUNT = 19
FRAMES_PER_WINDOW = 12
DEFAULT_FPS = 60.0
DEFAULT_FRAMES_PER_RECORDING = 64

THUMB = slice(0, 3)
FINGERS = (slice(3, 7), slice(7, 11), slice(11, 15), slice(15, 19))


class TooFewFrames(ValueError):
    pass


class GestureLabel(IntEnum):
    STOP = 0
    COME_HERE = 1
    POINT = 2
    BACKGROUND = 3

    @property
    def wire(self) -> str:
        return _LABEL_WIRE[self]

    @staticmethod
    def from_wire(name: str) -> "GestureLabel":
        try:
            return _WIRE_LABEL[name]
        except KeyError:
            raise ValueError(f"unknown gesture label {name!r}") from None


_LABEL_WIRE = {
    GestureLabel.STOP: "stop",
    GestureLabel.COME_HERE: "come_here",
    GestureLabel.POINT: "point",
    GestureLabel.BACKGROUND: "background",
}
_WIRE_LABEL = {v: k for k, v in _LABEL_WIRE.items()}


@dataclass(frozen=True)
class HandFrame:
    timestamp: float
    flexion: np.ndarray  # (19,) radians

    def __post_init__(self) -> None:
        flex = np.asarray(self.flexion, dtype=float).reshape(JOINT_COUNT)
        if not np.isfinite(flex).all():
            raise ValueError("flexion angles must be finite")
        if np.abs(flex).max() > math.pi + 1e-12:
            raise ValueError("flexion angles must lie in [-pi, pi]")
        flex.setflags(write=False)
        object.__setattr__(self, "flexion", flex)


@dataclass(frozen=True)
class GestureWindow:
    frames: tuple[HandFrame, ...]

    def __post_init__(self) -> None:
        if len(self.frames) != FRAMES_PER_WINDOW:
            raise ValueError(f"a window holds exactly {FRAMES_PER_WINDOW} frames")
        times = [f.timestamp for f in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("frame timestamps must be strictly increasing")

    def tensor(self) -> np.ndarray:
        """(12, 19) array, time along the first axis."""
        return np.stack([f.flexion for f in self.frames])

    def features(self) -> np.ndarray:
        """Row-major flattening: frame 0's joints first, then frame 1, ..."""
        return self.tensor().ravel()

    @property
    def end_time(self) -> float:
        return self.frames[-1].timestamp


def window_stream(frames: Sequence[HandFrame]) -> list[GestureWindow]:
    """Sliding windows of 12 frames with stride 1."""
    if len(frames) < FRAMES_PER_WINDOW:
        raise TooFewFrames(f"need at least {FRAMES_PER_WINDOW} frames, got {len(frames)}")
    return [
        GestureWindow(tuple(frames[i : i + FRAMES_PER_WINDOW]))
        for i in range(len(frames) - FRAMES_PER_WINDOW + 1)
    ]


@dataclass(frozen=True)
class SyntheticSubject:
    name: str
    amplitude: float = 1.0
    tempo: float = 1.0
    offsets: np.ndarray = field(default_factory=lambda: np.zeros(JOINT_COUNT))
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        off = np.asarray(self.offsets, dtype=float).reshape(JOINT_COUNT)
        off.setflags(write=False)
        object.__setattr__(self, "offsets", off)


@dataclass(frozen=True)
class Recording:
    subject: str
    label: GestureLabel
    fps: float
    frames: np.ndarray  # (F, 19)

    def hand_frames(self) -> list[HandFrame]:
        return [
            HandFrame(timestamp=i / self.fps, flexion=row)
            for i, row in enumerate(self.frames)
        ]


def identity_subject(name: str = "template") -> SyntheticSubject:
    return SyntheticSubject(name=name)


def class_template(
    label: GestureLabel, t: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Nominal joint trajectories for one gesture at times t (seconds)."""
    n = len(t)
    angles = np.zeros((n, JOINT_COUNT))
    if label == GestureLabel.STOP:
        # open palm: every joint relaxes toward nearly straight
        settle = np.exp(-t / 0.15)[:, None]
        angles[:, THUMB] = 0.05 + (0.40 - 0.05) * settle
        for fingers in FINGERS:
            angles[:, fingers] = 0.05 + (0.60 - 0.05) * settle
    elif label == GestureLabel.COME_HERE:
        # periodic curl, slightly phase-shifted per finger group
        angles[:, THUMB] = 0.35 + 0.05 * np.sin(2 * math.pi * 1.8 * t)[:, None]
        for g, fingers in enumerate(FINGERS):
            wave = np.sin(2 * math.pi * 1.8 * t - 0.5 * g)
            angles[:, fingers] = 0.65 + 0.45 * wave[:, None]
    elif label == GestureLabel.POINT:
        settle = np.exp(-t / 0.1)[:, None]
        angles[:, THUMB] = 0.50 + (0.60 - 0.50) * settle
        for g, fingers in enumerate(FINGERS):
            target = 0.06 if g == 0 else 1.15
            angles[:, fingers] = target + (0.60 - target) * settle
    else:
        # background: smoothed per-joint random walks
        start = rng.uniform(0.15, 0.9, JOINT_COUNT)
        steps = rng.normal(0.0, 0.06, (n, JOINT_COUNT))
        walk = start + np.cumsum(steps, axis=0)
        smoothed = np.empty_like(walk)
        smoothed[0] = walk[0]
        for i in range(1, n):
            smoothed[i] = 0.75 * smoothed[i - 1] + 0.25 * walk[i]
        angles = np.clip(smoothed, 0.0, 1.3)
    return angles


def _recording_rng(subject: SyntheticSubject, label: GestureLabel, rep: int) -> np.random.Generator:
    return np.random.default_rng([subject.seed & 0xFFFFFFFF, int(label), rep])


def generate_recording(
    subject: SyntheticSubject,
    label: GestureLabel,
    rep: int,
    n_frames: int = DEFAULT_FRAMES_PER_RECORDING,
    fps: float = DEFAULT_FPS,
) -> Recording:
    rng = _recording_rng(subject, label, rep)
    t = np.arange(n_frames) / fps * subject.tempo
    base = class_template(label, t, rng)
    angles = subject.amplitude * base + subject.offsets
    if subject.noise_sigma > 0:
        angles = angles + rng.normal(0.0, subject.noise_sigma, angles.shape)
    return Recording(
        subject=subject.name,
        label=label,
        fps=fps,
        frames=np.clip(angles, -math.pi, math.pi),
    )


def generate_dataset(
    subjects: Sequence[SyntheticSubject],
    reps: int = 2,
    n_frames: int = DEFAULT_FRAMES_PER_RECORDING,
    fps: float = DEFAULT_FPS,
) -> list[Recording]:
    """reps recordings of every gesture class for every subject."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    recordings = []
    for subject in subjects:
        for label in GestureLabel:
            for rep in range(reps):
                recordings.append(generate_recording(subject, label, rep, n_frames, fps))
    return recordings


def default_subjects(count: int = 6, seed: int = 0) -> list[SyntheticSubject]:
    """Subjects with mild, seeded variations around the class templates."""
    rng = np.random.default_rng(seed)
    subjects = []
    for i in range(count):
        subjects.append(
            SyntheticSubject(
                name=f"subject-{i}",
                amplitude=float(rng.uniform(0.85, 1.15)),
                tempo=float(rng.uniform(0.8, 1.25)),
                offsets=rng.normal(0.0, 0.05, JOINT_COUNT),
                noise_sigma=0.02,
                seed=seed * 1000 + i,
            )
        )
    return subjects


def save_dataset(recordings: Iterable[Recording], path: str | os.PathLike) -> None:
    """One JSON object per line: subject, label, fps, frames."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in recordings:
            fh.write(
                json.dumps(
                    {
                        "subject": rec.subject,
                        "label": rec.label.wire,
                        "fps": rec.fps,
                        "frames": [[float(v) for v in row] for row in rec.frames],
                    }
                )
            )
            fh.write("\n")


def load_dataset(path: str | os.PathLike) -> list[Recording]:
    recordings = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        recordings.append(
            Recording(
                subject=doc["subject"],
                label=GestureLabel.from_wire(doc["label"]),
                fps=float(doc["fps"]),
                frames=np.array(doc["frames"], dtype=float),
            )
        )
    return recordings


def windows_by_subject(
    recordings: Iterable[Recording],
) -> dict[str, list[tuple[GestureWindow, GestureLabel]]]:
    """Window every recording and group the labeled windows by subject."""
    grouped: dict[str, list[tuple[GestureWindow, GestureLabel]]] = {}
    for rec in recordings:
        windows = window_stream(rec.hand_frames())
        grouped.setdefault(rec.subject, []).extend((w, rec.label) for w in windows)
    return grouped
