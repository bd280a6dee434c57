"""Small fully connected network with from-scratch backpropagation.

The network estimates the two quadrature-rule errors from a feature
vector. Everything is float64 numpy, single-threaded and seeded, so a
training run is exactly reproducible. Supports a regression head (MSE on
scaled error targets) and a classification head (softmax cross-entropy
over the rule index).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .features import FeatureStats

MODEL_FORMAT = "pmselect-mlp"
MODEL_VERSION = 1

REGRESSION = "regression"
CLASSIFICATION = "classification"

DEFAULT_DIMS = (87, 128, 64, 2)


class ModelFileError(ValueError):
    """The model file is missing, truncated, or structurally invalid."""


class ModelVersionError(ModelFileError):
    """The model file was written by an incompatible format version."""


@dataclass
class Mlp:
    """Fully connected tanh network.

    `weights[i]` has shape (d_out, d_in). With `linear_output` the last
    layer skips the tanh; otherwise every layer, output included, applies
    it. `feature_stats` standardizes raw features before the forward pass
    and `target_scale` converts the bounded outputs back to error units.
    """

    weights: list
    biases: list
    head: str = REGRESSION
    linear_output: bool = False
    feature_stats: Optional[FeatureStats] = None
    target_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.head not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown head {self.head!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be nonempty and aligned")
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != b.shape[0]:
                raise ValueError("bias length must match weight rows")
        if self.target_scale is not None:
            self.target_scale = np.asarray(self.target_scale, dtype=np.float64)

    @property
    def layer_dims(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def init_mlp(dims, head: str = REGRESSION, seed: int = 0,
             linear_output: bool = False) -> Mlp:
    """Network with uniform fan-based weight init and zero biases, seeded."""
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError("dims must list at least input and output sizes, all >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return Mlp(weights=weights, biases=biases, head=head, linear_output=linear_output)


def forward(mlp: Mlp, x):
    """Forward pass; returns (output, per-layer activation cache).

    Accepts a single vector or a (batch, features) matrix; the output
    shape follows the input.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    a = np.atleast_2d(arr)
    if a.shape[1] != mlp.layer_dims[0]:
        raise ValueError(
            f"input length {a.shape[1]} does not match network input {mlp.layer_dims[0]}"
        )
    activations = [a]
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = activations[-1] @ w.T + b
        a = z if (i == last and mlp.linear_output) else np.tanh(z)
        activations.append(a)
    out = activations[-1]
    return (out[0], activations) if single else (out, activations)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_value(mlp: Mlp, x: np.ndarray, y: np.ndarray) -> float:
    """Mean loss of the batch under the model's head."""
    out, _ = forward(mlp, np.atleast_2d(x))
    if mlp.head == REGRESSION:
        return float(np.mean((out - y) ** 2))
    probs = _softmax(out)
    picked = probs[np.arange(len(probs)), np.asarray(y, dtype=np.intp)]
    return float(np.mean(-np.log(np.maximum(picked, 1e-300))))


def backward(mlp: Mlp, x: np.ndarray, y: np.ndarray):
    """Exact gradients of the mean batch loss.

    Regression: y is a (batch, outputs) array of scaled targets, loss is
    the MSE averaged over batch and outputs. Classification: y is a
    (batch,) array of class indices, loss is softmax cross-entropy.
    Returns (weight grads, bias grads, loss).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if len(x) == 0:
        raise ValueError("batch must be nonempty")
    out, activations = forward(mlp, x)
    if mlp.head == REGRESSION:
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        loss = float(np.mean((out - y) ** 2))
        delta = 2.0 * (out - y) / out.size
    else:
        labels = np.asarray(y, dtype=np.intp).ravel()
        probs = _softmax(out)
        picked = probs[np.arange(len(probs)), labels]
        loss = float(np.mean(-np.log(np.maximum(picked, 1e-300))))
        delta = probs.copy()
        delta[np.arange(len(probs)), labels] -= 1.0
        delta /= len(probs)

    grad_w = [None] * len(mlp.weights)
    grad_b = [None] * len(mlp.weights)
    last = len(mlp.weights) - 1
    for i in range(last, -1, -1):
        if not (i == last and mlp.linear_output):
            delta = delta * (1.0 - activations[i + 1] ** 2)
        grad_w[i] = delta.T @ activations[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ mlp.weights[i]
    return grad_w, grad_b, loss


@dataclass(frozen=True)
class TrainConfig:
    """SGDM hyperparameters; the defaults are the recommended settings."""

    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 128
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass
class TrainReport:
    """Per-epoch losses and bookkeeping for a training run."""

    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    best_epoch: int = -1
    final_epoch: int = -1
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "best_epoch": self.best_epoch,
            "final_epoch": self.final_epoch,
            "wall_clock": self.wall_clock,
        }


def init_velocity(mlp: Mlp):
    return ([np.zeros_like(w) for w in mlp.weights],
            [np.zeros_like(b) for b in mlp.biases])


def sgdm_step(mlp: Mlp, grads, velocity, cfg: TrainConfig) -> None:
    """One momentum update, in place: v <- m*v - lr*g, theta <- theta + v."""
    grad_w, grad_b = grads
    vel_w, vel_b = velocity
    for i in range(len(mlp.weights)):
        vel_w[i] *= cfg.momentum
        vel_w[i] -= cfg.learning_rate * grad_w[i]
        mlp.weights[i] += vel_w[i]
        vel_b[i] *= cfg.momentum
        vel_b[i] -= cfg.learning_rate * grad_b[i]
        mlp.biases[i] += vel_b[i]


def train(train_x, train_y, val_x, val_y, cfg: TrainConfig,
          dims=DEFAULT_DIMS, head: str = REGRESSION, linear_output: bool = False,
          feature_stats: Optional[FeatureStats] = None,
          target_scale: Optional[np.ndarray] = None):
    """Mini-batch SGDM with per-epoch shuffling and validation early stop.

    Inputs are expected already standardized (and, for regression,
    targets already scaled). Returns the parameters of the best
    validation epoch together with the training report.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    if len(train_x) == 0:
        raise ValueError("training set is empty")
    start = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    mlp = init_mlp(dims, head=head, seed=cfg.seed, linear_output=linear_output)
    mlp.feature_stats = feature_stats
    mlp.target_scale = target_scale
    velocity = init_velocity(mlp)

    report = TrainReport()
    best_val = np.inf
    best_params = None
    stale = 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(train_x))
        batch_losses = []
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            grad_w, grad_b, loss = backward(mlp, train_x[idx], train_y[idx])
            sgdm_step(mlp, (grad_w, grad_b), velocity, cfg)
            batch_losses.append(loss)
        report.train_losses.append(float(np.mean(batch_losses)))
        val = loss_value(mlp, val_x, val_y)
        report.val_losses.append(val)
        report.final_epoch = epoch
        if val < best_val:
            best_val = val
            best_params = ([w.copy() for w in mlp.weights],
                           [b.copy() for b in mlp.biases])
            report.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                break
    if best_params is not None:
        mlp.weights, mlp.biases = best_params
    report.wall_clock = time.perf_counter() - start
    return mlp, report


def train_error_estimator(train_features, train_errors, val_features, val_errors,
                          cfg: TrainConfig, dims=DEFAULT_DIMS, head: str = REGRESSION,
                          linear_output: bool = False):
    """Full training pipeline from raw features and per-rule errors.

    Standardization statistics and (for regression) the per-output target
    scale are estimated on the training split only and stored in the
    returned model.
    """
    train_features = np.asarray(train_features, dtype=np.float64)
    stats = FeatureStats.from_samples(train_features)
    tx = (train_features - stats.mean) / stats.std
    vx = (np.asarray(val_features, dtype=np.float64) - stats.mean) / stats.std
    train_errors = np.asarray(train_errors, dtype=np.float64)
    val_errors = np.asarray(val_errors, dtype=np.float64)
    if head == REGRESSION:
        scale = np.abs(train_errors).max(axis=0)
        scale[scale == 0.0] = 1.0
        ty = train_errors / scale
        vy = val_errors / scale
    else:
        scale = None
        ty = np.argmin(np.abs(train_errors), axis=1)
        vy = np.argmin(np.abs(val_errors), axis=1)
    return train(tx, ty, vx, vy, cfg, dims=dims, head=head,
                 linear_output=linear_output, feature_stats=stats,
                 target_scale=scale)


def estimate_errors(mlp: Mlp, features):
    """Rule-error estimates for raw (unstandardized) feature input."""
    if mlp.head != REGRESSION:
        raise ValueError("error estimates need a regression-head model")
    x = np.asarray(features, dtype=np.float64)
    if mlp.feature_stats is not None:
        x = (x - mlp.feature_stats.mean) / mlp.feature_stats.std
    out, _ = forward(mlp, x)
    if mlp.target_scale is not None:
        out = out * mlp.target_scale
    return out


def classify_rule_probs(mlp: Mlp, features):
    """Class probabilities over the rules for raw feature input."""
    if mlp.head != CLASSIFICATION:
        raise ValueError("class probabilities need a classification-head model")
    x = np.asarray(features, dtype=np.float64)
    if mlp.feature_stats is not None:
        x = (x - mlp.feature_stats.mean) / mlp.feature_stats.std
    out, _ = forward(mlp, np.atleast_2d(x))
    probs = _softmax(out)
    return probs[0] if np.asarray(features).ndim == 1 else probs


def save_model(mlp: Mlp, path) -> None:
    """Write the model as versioned JSON; load-save round trips bit-exactly."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dims": list(mlp.layer_dims),
        "head": mlp.head,
        "linear_output": mlp.linear_output,
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(mlp.weights, mlp.biases)
        ],
        "feature_stats": None if mlp.feature_stats is None else {
            "mean": mlp.feature_stats.mean.tolist(),
            "std": mlp.feature_stats.std.tolist(),
        },
        "target_scale": None if mlp.target_scale is None else mlp.target_scale.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path) -> Mlp:
    """Read a model written by `save_model`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFileError(f"{path} is not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ModelVersionError(
            f"{path} has version {payload.get('version')!r}, expected {MODEL_VERSION}"
        )
    try:
        weights = [np.asarray(layer["weights"], dtype=np.float64)
                   for layer in payload["layers"]]
        biases = [np.asarray(layer["bias"], dtype=np.float64)
                  for layer in payload["layers"]]
        stats = payload["feature_stats"]
        feature_stats = None if stats is None else FeatureStats(
            mean=np.asarray(stats["mean"], dtype=np.float64),
            std=np.asarray(stats["std"], dtype=np.float64),
        )
        scale = payload["target_scale"]
        target_scale = None if scale is None else np.asarray(scale, dtype=np.float64)
        mlp = Mlp(weights=weights, biases=biases, head=payload["head"],
                  linear_output=bool(payload["linear_output"]),
                  feature_stats=feature_stats, target_scale=target_scale)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path} is structurally invalid: {exc}") from exc
    if list(mlp.layer_dims) != list(payload["dims"]):
        raise ModelFileError(f"{path} layer shapes do not match the declared dims")
    return mlp
