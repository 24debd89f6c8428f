"""The gesture classifier: an MLP with self-attention, written in numpy.

Per time step a shared dense layer lifts the 19 flexion angles to 128
dims, a second dense layer mixes them, single-head scaled-dot-product
self-attention runs over the 12 time steps, the attended tokens are
mean-pooled, and a final dense layer scores the 4 classes. Confidences
are per-class sigmoids; training minimizes per-class binary cross-entropy
with plain SGD. All math is float64 and seeded, so runs are bit-identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import JOINT_COUNT, GestureLabel, GestureWindow

HIDDEN_DIM = 128
N_CLASSES = 4
_SCALE = 1.0 / np.sqrt(HIDDEN_DIM)

PARAM_SHAPES = {
    "token_w": (JOINT_COUNT, HIDDEN_DIM),
    "token_b": (HIDDEN_DIM,),
    "hidden_w": (HIDDEN_DIM, HIDDEN_DIM),
    "hidden_b": (HIDDEN_DIM,),
    "query_w": (HIDDEN_DIM, HIDDEN_DIM),
    "query_b": (HIDDEN_DIM,),
    "key_w": (HIDDEN_DIM, HIDDEN_DIM),
    "key_b": (HIDDEN_DIM,),
    "value_w": (HIDDEN_DIM, HIDDEN_DIM),
    "value_b": (HIDDEN_DIM,),
    "out_w": (HIDDEN_DIM, N_CLASSES),
    "out_b": (N_CLASSES,),
}


class ClassMissing(ValueError):
    pass


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass
class GestureNet:
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, shape in PARAM_SHAPES.items():
            if name not in self.params:
                raise ValueError(f"missing parameter {name}")
            arr = np.asarray(self.params[name], dtype=float)
            if arr.shape != shape:
                raise ValueError(f"parameter {name} has shape {arr.shape}, want {shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"parameter {name} has non-finite entries")
            self.params[name] = arr

    @classmethod
    def init(cls, seed: int) -> "GestureNet":
        """Uniform init in +-1/sqrt(fan_in) per parameter."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in PARAM_SHAPES.items():
            fan_in = shape[0] if len(shape) == 2 else PARAM_SHAPES[name.replace("_b", "_w")][0]
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, shape)
        return cls(params)

    def copy(self) -> "GestureNet":
        return GestureNet({k: v.copy() for k, v in self.params.items()})


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax_rows(s: np.ndarray) -> np.ndarray:
    shifted = s - s.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(net: GestureNet, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """x: (B, 12, 19) -> logits (B, 4) plus the cache for backward."""
    p = net.params
    u1 = x @ p["token_w"] + p["token_b"]
    h1 = np.maximum(u1, 0.0)
    u2 = h1 @ p["hidden_w"] + p["hidden_b"]
    h2 = np.maximum(u2, 0.0)
    q = h2 @ p["query_w"] + p["query_b"]
    k = h2 @ p["key_w"] + p["key_b"]
    v = h2 @ p["value_w"] + p["value_b"]
    scores = (q @ k.transpose(0, 2, 1)) * _SCALE
    attn = _softmax_rows(scores)
    z = attn @ v
    pooled = z.mean(axis=1)
    logits = pooled @ p["out_w"] + p["out_b"]
    cache = {
        "x": x, "u1": u1, "h1": h1, "u2": u2, "h2": h2,
        "q": q, "k": k, "v": v, "attn": attn, "pooled": pooled,
    }
    return logits, cache


def forward_confidences(net: GestureNet, x: np.ndarray) -> np.ndarray:
    logits, _ = _forward(net, x)
    return _sigmoid(logits)


def attention_weights(net: GestureNet, x: np.ndarray) -> np.ndarray:
    """(B, 12, 12) attention rows; each query row sums to 1."""
    _, cache = _forward(net, x)
    return cache["attn"]


def infer(net: GestureNet, window: GestureWindow) -> tuple[np.ndarray, GestureLabel]:
    """Per-class confidences and the argmax label.

    Exact ties go to BACKGROUND when it participates, else to the lowest
    class index: an inconclusive classifier should not command the robot.
    """
    conf = forward_confidences(net, window.tensor()[None, :, :])[0]
    best = conf.max()
    tied = np.flatnonzero(conf == best)
    if int(GestureLabel.BACKGROUND) in tied:
        label = GestureLabel.BACKGROUND
    else:
        label = GestureLabel(int(tied[0]))
    return conf, label


def _bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> float:
    """Per-class binary cross-entropy, summed over classes, mean over batch."""
    loss = np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    return float(loss.sum(axis=-1).mean())


def loss_and_grads(
    net: GestureNet, x: np.ndarray, targets: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean per-class binary cross-entropy and analytic parameter gradients."""
    p = net.params
    logits, cache = _forward(net, x)
    loss = _bce_with_logits(logits, targets)
    b, t, _ = x.shape

    dlogits = (_sigmoid(logits) - targets) / logits.shape[0]
    pooled, attn, v, q, k = cache["pooled"], cache["attn"], cache["v"], cache["q"], cache["k"]
    h2, u2, h1, u1 = cache["h2"], cache["u2"], cache["h1"], cache["u1"]

    grads: dict[str, np.ndarray] = {}
    grads["out_w"] = pooled.T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dpooled = dlogits @ p["out_w"].T
    dz = np.broadcast_to(dpooled[:, None, :] / t, (b, t, HIDDEN_DIM))

    dattn = dz @ v.transpose(0, 2, 1)
    dv = attn.transpose(0, 2, 1) @ dz
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dq = (dscores @ k) * _SCALE
    dk = (dscores.transpose(0, 2, 1) @ q) * _SCALE

    h2_flat = h2.reshape(-1, HIDDEN_DIM)
    for name, grad in (("query_w", dq), ("key_w", dk), ("value_w", dv)):
        grads[name] = h2_flat.T @ grad.reshape(-1, HIDDEN_DIM)
        grads[name.replace("_w", "_b")] = grad.sum(axis=(0, 1))
    dh2 = dq @ p["query_w"].T + dk @ p["key_w"].T + dv @ p["value_w"].T

    du2 = dh2 * (u2 > 0)
    grads["hidden_w"] = h1.reshape(-1, HIDDEN_DIM).T @ du2.reshape(-1, HIDDEN_DIM)
    grads["hidden_b"] = du2.sum(axis=(0, 1))
    dh1 = du2 @ p["hidden_w"].T

    du1 = dh1 * (u1 > 0)
    grads["token_w"] = x.reshape(-1, JOINT_COUNT).T @ du1.reshape(-1, HIDDEN_DIM)
    grads["token_b"] = du1.sum(axis=(0, 1))
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    learning_rate: float = 1e-2
    batch_size: int = 32
    seed: int = 7


@dataclass(frozen=True)
class TrainReport:
    holdout_subject: str
    initial_loss: float
    final_loss: float
    holdout_accuracy: float
    epoch_losses: tuple[float, ...]
    n_train: int
    n_holdout: int


def _windows_to_arrays(
    pairs: Sequence[tuple[GestureWindow, GestureLabel]],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.stack([w.tensor() for w, _ in pairs])
    labels = np.array([int(lbl) for _, lbl in pairs])
    targets = np.zeros((len(pairs), N_CLASSES))
    targets[np.arange(len(pairs)), labels] = 1.0
    return x, targets, labels


def train(
    data: Mapping[str, Sequence[tuple[GestureWindow, GestureLabel]]],
    holdout: str,
    cfg: TrainConfig = TrainConfig(),
) -> tuple[GestureNet, TrainReport]:
    """SGD over all subjects except `holdout`, which is kept for validation."""
    if len(data) < 2:
        raise ValueError("need at least 2 subjects")
    if holdout not in data:
        raise ValueError(f"holdout subject {holdout!r} not in data")
    train_pairs = [p for s, pairs in data.items() if s != holdout for p in pairs]
    holdout_pairs = list(data[holdout])
    present = {int(lbl) for _, lbl in train_pairs}
    missing = [GestureLabel(i).wire for i in range(N_CLASSES) if i not in present]
    if missing:
        raise ClassMissing(f"training split is missing classes: {missing}")

    x_train, y_train, _ = _windows_to_arrays(train_pairs)
    net = GestureNet.init(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    initial_loss = _bce_with_logits(_forward(net, x_train)[0], y_train)

    n = len(train_pairs)
    epoch_losses = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        batch_losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            loss, grads = loss_and_grads(net, x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss}")
            for name, grad in grads.items():
                net.params[name] -= cfg.learning_rate * grad
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))

    final_loss = _bce_with_logits(_forward(net, x_train)[0], y_train)
    correct = 0
    for window, label in holdout_pairs:
        _, predicted = infer(net, window)
        correct += int(predicted == label)
    accuracy = correct / len(holdout_pairs) if holdout_pairs else float("nan")
    report = TrainReport(
        holdout_subject=holdout,
        initial_loss=initial_loss,
        final_loss=final_loss,
        holdout_accuracy=accuracy,
        epoch_losses=tuple(epoch_losses),
        n_train=len(train_pairs),
        n_holdout=len(holdout_pairs),
    )
    return net, report


def save_net(net: GestureNet, path: str | os.PathLike) -> None:
    doc = {
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in net.params.items()
        }
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_net(path: str | os.PathLike) -> GestureNet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    params = {}
    for name, entry in doc["params"].items():
        params[name] = np.array(entry["data"], dtype=float).reshape(entry["shape"])
    return GestureNet(params)
