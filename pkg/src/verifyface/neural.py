"""Three-layer sigmoid network trained by full-batch backprop with momentum."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

GOAL_REACHED = "goal_reached"
MAX_EPOCHS = "max_epochs"


@dataclass
class Mlp:
    """Weights are stored (fan_out, fan_in); biases are zero at init."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return (self.w1.shape[1], self.w1.shape[0], self.w2.shape[0])

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self) -> "Mlp":
        return Mlp(*(p.copy() for p in self.params()))


@dataclass(frozen=True)
class TrainConfig:
    error_goal: float = 1e-3
    learning_rate: float = 0.5
    momentum: float = 0.9
    max_epochs: int = 50000
    seed: int = 0

    def __post_init__(self):
        if not self.error_goal > 0:
            raise ValueError("error_goal must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class TrainingCurve:
    mse: list[float] = field(default_factory=list)
    stop_reason: str = MAX_EPOCHS

    @property
    def epochs(self) -> int:
        return len(self.mse)

    def to_csv(self) -> str:
        lines = ["epoch,mse"]
        lines += [f"{i + 1},{v:.9g}" for i, v in enumerate(self.mse)]
        return "\n".join(lines) + "\n"


class TrainingError(RuntimeError):
    """Training hit max_epochs before the error goal; the curve is attached."""

    def __init__(self, message, curve: TrainingCurve):
        super().__init__(message)
        self.curve = curve


def sigmoid(t):
    return expit(t)


def mlp_init(layer_sizes, seed: int = 0) -> Mlp:
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) != 3 or min(sizes) < 1:
        raise ValueError(f"need three positive layer sizes, got {layer_sizes}")
    n_in, n_hid, n_out = sizes
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-1, 1, (n_hid, n_in)) / np.sqrt(n_in)
    w2 = rng.uniform(-1, 1, (n_out, n_hid)) / np.sqrt(n_hid)
    return Mlp(w1, np.zeros(n_hid), w2, np.zeros(n_out))


def _as_batch(x, dim):
    x = np.asarray(x, dtype=np.float64)
    batch = x.reshape(1, -1) if x.ndim == 1 else x
    if batch.shape[1] != dim:
        raise ValueError(f"input dimension {batch.shape[1]} != network input {dim}")
    return batch


def _as_targets(targets, count: int, n_out: int):
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim == 1:
        t = t.reshape(1, -1) if count == 1 else t.reshape(-1, 1)
    if t.shape[0] != count:
        raise ValueError(f"{count} inputs but {t.shape[0]} targets")
    if t.shape[1] != n_out:
        raise ValueError(f"target width {t.shape[1]} != network output {n_out}")
    return t


def _forward(net: Mlp, x):
    h = sigmoid(x @ net.w1.T + net.b1)
    y = sigmoid(h @ net.w2.T + net.b2)
    return h, y


def forward(net: Mlp, x) -> np.ndarray:
    """Network outputs for one vector (1-D result) or a batch (one row each)."""
    batch = _as_batch(x, net.w1.shape[1])
    y = _forward(net, batch)[1]
    return y[0] if np.ndim(x) == 1 else y


def mse(net: Mlp, inputs, targets) -> float:
    x = _as_batch(inputs, net.w1.shape[1])
    t = _as_targets(targets, x.shape[0], net.w2.shape[0])
    y = _forward(net, x)[1]
    return float(np.mean((y - t) ** 2))


def gradients(net: Mlp, inputs, targets) -> list[np.ndarray]:
    """Gradient of :func:`mse` w.r.t. (w1, b1, w2, b2)."""
    x = _as_batch(inputs, net.w1.shape[1])
    t = _as_targets(targets, x.shape[0], net.w2.shape[0])
    h, y = _forward(net, x)
    scale = 2.0 / y.size
    d2 = scale * (y - t) * y * (1.0 - y)
    d1 = (d2 @ net.w2) * h * (1.0 - h)
    return [d1.T @ x, d1.sum(axis=0), d2.T @ h, d2.sum(axis=0)]


def backprop_step(net: Mlp, inputs, targets, lr: float, momentum: float, velocity=None):
    """One momentum update: v <- momentum*v - lr*grad; params <- params + v.

    Returns a new network and the new velocity list; ``net`` is untouched.
    """
    if np.asarray(inputs).size == 0:
        raise ValueError("empty batch")
    grads = gradients(net, inputs, targets)
    if velocity is None:
        velocity = [np.zeros_like(g) for g in grads]
    new_v = [momentum * v - lr * g for v, g in zip(velocity, grads)]
    new_net = Mlp(*(p + v for p, v in zip(net.params(), new_v)))
    return new_net, new_v


def train(net: Mlp, inputs, targets, config: TrainConfig = TrainConfig()):
    """Full-batch training until MSE <= error_goal or max_epochs.

    Each epoch records the MSE of the current parameters, stops if it meets
    the goal, and otherwise takes one momentum step.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty dataset")
    x = _as_batch(x, net.w1.shape[1])
    t = _as_targets(targets, x.shape[0], net.w2.shape[0])

    w1, b1, w2, b2 = (p.copy() for p in net.params())
    v = [np.zeros_like(p) for p in (w1, b1, w2, b2)]
    lr, mu = config.learning_rate, config.momentum
    scale = 2.0 / t.size
    curve = TrainingCurve()
    for _ in range(config.max_epochs):
        h = sigmoid(x @ w1.T + b1)
        y = sigmoid(h @ w2.T + b2)
        err = y - t
        loss = float(np.mean(err * err))
        curve.mse.append(loss)
        if loss <= config.error_goal:
            curve.stop_reason = GOAL_REACHED
            break
        d2 = scale * err * y * (1.0 - y)
        d1 = (d2 @ w2) * h * (1.0 - h)
        grads = (d1.T @ x, d1.sum(axis=0), d2.T @ h, d2.sum(axis=0))
        for vi, g in zip(v, grads):
            vi *= mu
            vi -= lr * g
        w1 += v[0]
        b1 += v[1]
        w2 += v[2]
        b2 += v[3]
    else:
        curve.stop_reason = MAX_EPOCHS
    return Mlp(w1, b1, w2, b2), curve


def one_hot(indices, n_classes: int) -> np.ndarray:
    out = np.zeros((len(indices), n_classes))
    out[np.arange(len(indices)), np.asarray(indices)] = 1.0
    return out
