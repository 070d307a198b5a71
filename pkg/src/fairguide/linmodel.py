"""Linear decision models and plain logistic-regression training.

Models are immutable values; ``fit`` is deterministic (zero init,
full-batch descent with step halving on any objective increase).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, ValidationError

PCLIP = kernels.PCLIP


def _freeze(arr):
    out = np.array(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze(self.weights))
        object.__setattr__(self, "bias", float(self.bias))
        if not (np.isfinite(self.weights).all() and math.isfinite(self.bias)):
            raise ValidationError("model parameters must be finite")

    @property
    def width(self):
        return self.weights.shape[0]

    @staticmethod
    def zeros(width):
        return LinearModel(weights=np.zeros(width), bias=0.0)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 2000
    l2: float = 1e-2
    seed: int = 0
    batch: str = "full"  # "full" | "single-sample"

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 10.0:
            raise ValidationError("learning_rate must be in (0, 10]")
        if not 1 <= self.epochs <= 10**6:
            raise ValidationError("epochs must be in [1, 1e6]")
        if self.l2 < 0.0:
            raise ValidationError("l2 must be >= 0")
        if self.batch not in ("full", "single-sample"):
            raise ValidationError(f"unknown batch mode {self.batch!r}")


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray
    label: int
    z: int

    def __post_init__(self):
        object.__setattr__(self, "features", _freeze(self.features))
        if self.label not in (0, 1):
            raise ValidationError("label must be 0 or 1")
        if self.z not in (0, 1):
            raise ValidationError("z must be 0 or 1")


@dataclass(frozen=True)
class FitResult:
    model: LinearModel
    degenerate: bool = False
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_width(model, features):
    if model.width != len(features):
        raise DimensionMismatch(
            f"model width {model.width} != feature length {len(features)}"
        )


def sigmoid(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def predict_prob(model: LinearModel, features) -> float:
    _check_width(model, features)
    return float(sigmoid(model.weights @ np.asarray(features, dtype=np.float64)
                         + model.bias))


def predict_probs(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.width:
        raise DimensionMismatch(
            f"model width {model.width} != feature length {X.shape[1]}"
        )
    return sigmoid(X @ model.weights + model.bias)


def loss_gradient(model: LinearModel, example: LabeledExample):
    """Binary cross entropy of one example and its exact gradient.

    Returns (loss, grad_w, grad_b) with grad_w = (p - y) x, grad_b = p - y.
    The probability is clamped inside the loss only.
    """
    _check_width(model, example.features)
    p = predict_prob(model, example.features)
    pc = min(max(p, PCLIP), 1.0 - PCLIP)
    y = example.label
    loss = -(y * math.log(pc) + (1 - y) * math.log(1.0 - pc))
    grad_b = p - y
    grad_w = grad_b * example.features
    return loss, grad_w, grad_b


def sgd_step(model: LinearModel, example: LabeledExample, eta: float) -> LinearModel:
    """One stochastic-gradient update; the input model is unchanged."""
    if eta < 0:
        raise ValidationError("eta must be >= 0")
    _, grad_w, grad_b = loss_gradient(model, example)
    return LinearModel(
        weights=model.weights - eta * grad_w, bias=model.bias - eta * grad_b
    )


def stack(examples):
    X = np.ascontiguousarray([e.features for e in examples], dtype=np.float64)
    y = np.asarray([e.label for e in examples], dtype=np.float64)
    z = np.asarray([e.z for e in examples], dtype=np.float64)
    return X, y, z


def _degenerate_fit(y, width) -> FitResult:
    rate = min(max(float(np.mean(y)), PCLIP), 1.0 - PCLIP)
    bias = math.log(rate / (1.0 - rate))
    return FitResult(
        model=LinearModel(weights=np.zeros(width), bias=bias), degenerate=True
    )


def fit(examples, config: TrainConfig = TrainConfig()) -> FitResult:
    """Full-batch logistic regression on (features, label) pairs.

    Single-class input yields the base-rate constant model with the
    degenerate flag set instead of an error.
    """
    if not examples:
        raise ValidationError("fit needs at least one example")
    X, y, z = stack(examples)
    if len({e.label for e in examples}) < 2:
        return _degenerate_fit(y, X.shape[1])
    if config.batch == "single-sample":
        return _fit_single_sample(X, y, config)
    w, b, trace = kernels.train_gd(
        X, y, np.zeros_like(z), config.learning_rate, config.epochs, config.l2, 0.0
    )
    return FitResult(model=LinearModel(weights=w, bias=b), objective_trace=trace)


def _fit_single_sample(X, y, config: TrainConfig) -> FitResult:
    # Shuffled per-example passes; only the shuffle consumes the seed.
    rng = np.random.default_rng(config.seed)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            p = float(sigmoid(X[i] @ w + b))
            r = p - y[i]
            w -= config.learning_rate * (r * X[i] + 2.0 * config.l2 * w / n)
            b -= config.learning_rate * r
    return FitResult(model=LinearModel(weights=w, bias=b))


# --- serialization ---------------------------------------------------------


def model_to_dict(model: LinearModel, schema_hash: str):
    return {
        "weights": [float(v) for v in model.weights],
        "bias": float(model.bias),
        "schema_hash": schema_hash,
    }


def model_from_dict(data, expected_schema_hash=None) -> LinearModel:
    if expected_schema_hash is not None and data.get("schema_hash") != expected_schema_hash:
        raise ValidationError(
            f"model schema_hash {data.get('schema_hash')!r} does not match "
            f"expected {expected_schema_hash!r}"
        )
    return LinearModel(weights=np.array(data["weights"]), bias=data["bias"])
