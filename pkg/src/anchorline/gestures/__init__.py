"""Hand-gesture classification over joint-flexion windows and the mapping
from recognized gestures to robot commands."""

from .data import (
    FRAMES_PER_WINDOW,
    JOINT_COUNT,
    GestureLabel,
    GestureWindow,
    HandFrame,
    Recording,
    SyntheticSubject,
    TooFewFrames,
    default_subjects,
    generate_dataset,
    load_dataset,
    save_dataset,
    window_stream,
    windows_by_subject,
)
from .net import (
    ClassMissing,
    GestureNet,
    NonFiniteLoss,
    TrainConfig,
    TrainReport,
    attention_weights,
    infer,
    load_net,
    loss_and_grads,
    save_net,
    train,
)
from .commands import (
    Command,
    CommandConfig,
    Goal,
    NoOp,
    Preempt,
    RayParallelToGround,
    gesture_to_command,
)

__all__ = [
    "FRAMES_PER_WINDOW",
    "JOINT_COUNT",
    "GestureLabel",
    "GestureWindow",
    "HandFrame",
    "Recording",
    "SyntheticSubject",
    "TooFewFrames",
    "default_subjects",
    "generate_dataset",
    "load_dataset",
    "save_dataset",
    "window_stream",
    "windows_by_subject",
    "ClassMissing",
    "GestureNet",
    "NonFiniteLoss",
    "TrainConfig",
    "TrainReport",
    "attention_weights",
    "infer",
    "load_net",
    "loss_and_grads",
    "save_net",
    "train",
    "Command",
    "CommandConfig",
    "Goal",
    "NoOp",
    "Preempt",
    "RayParallelToGround",
    "gesture_to_command",
]
