"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, SemframeError, ValidationError


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 500
    l2: float = 1.0
    tolerance: float = 1e-7
    seed: int = 0  # unused: zero init and full-batch updates are deterministic

    def __post_init__(self):
        vals = (self.learning_rate, self.l2, self.tolerance)
        if not all(np.isfinite(vals)):
            raise ValueError("training parameters must be finite")
        if self.learning_rate <= 0 or self.max_epochs < 1 or self.l2 < 0 or self.tolerance < 0:
            raise ValueError(f"invalid training parameters: {self}")


@dataclass
class LogRegModel:
    classes: tuple[str, ...]
    weights: np.ndarray  # C x (D + 1); last column is the bias
    l2: float = 0.0
    loss_history: list = field(default_factory=list, repr=False)
    metadata: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def to_json(self) -> str:
        obj = {
            "classes": list(self.classes),
            "D": self.dim,
            "l2": self.l2,
            "weights": [[float(x) for x in row] for row in self.weights],
        }
        if self.metadata:
            obj["metadata"] = self.metadata
        return json.dumps(obj) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "LogRegModel":
        try:
            obj = json.loads(text)
            weights = np.array(obj["weights"], dtype=np.float64)
            classes = tuple(obj["classes"])
            dim = int(obj["D"])
            l2 = float(obj["l2"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed model file: {e}") from None
        if weights.shape != (len(classes), dim + 1) or len(classes) < 2:
            raise ValidationError(f"model weights have shape {weights.shape}, "
                                  f"expected ({len(classes)}, {dim + 1}) with at least 2 classes")
        if not np.all(np.isfinite(weights)):
            raise ValidationError("model weights are not finite")
        return cls(classes, weights, l2, metadata=obj.get("metadata", {}))


def _with_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _log_softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    return Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))


def loss_and_gradient(W: np.ndarray, Xb: np.ndarray, Y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus (l2/2)*||W without bias||^2, and its gradient.

    ``Xb`` carries a trailing column of ones; ``Y`` is one-hot (n x C).
    """
    n = Xb.shape[0]
    logp = _log_softmax(Xb @ W.T)
    Wn = W[:, :-1]
    loss = -(Y * logp).sum() / n + 0.5 * l2 * (Wn * Wn).sum()
    grad = (np.exp(logp) - Y).T @ Xb / n
    grad[:, :-1] += l2 * Wn
    return float(loss), grad


def _matrix(features) -> np.ndarray:
    X = np.asarray(getattr(features, "values", features), dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def train(features, labels: Sequence[str] | Mapping, config: TrainConfig = TrainConfig()) -> LogRegModel:
    """Fit from a FeatureMatrix (or array) and per-row labels.

    ``labels`` is a sequence aligned with the rows, or a mapping keyed by the
    matrix's instance ids.
    """
    X = _matrix(features)
    if isinstance(labels, Mapping):
        try:
            labels = [labels[i] for i in features.instance_ids]
        except KeyError as e:
            raise ValidationError(f"instance {e.args[0]} has no label") from None
    labels = list(labels)
    if len(labels) != X.shape[0]:
        raise DimensionError(f"{len(labels)} labels for {X.shape[0]} rows")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValidationError(f"need at least 2 classes to train, got {len(classes)}")

    col = {c: i for i, c in enumerate(classes)}
    Y = np.zeros((X.shape[0], len(classes)))
    Y[np.arange(X.shape[0]), [col[y] for y in labels]] = 1.0
    Xb = _with_bias(X)
    W = np.zeros((len(classes), Xb.shape[1]))

    history = []
    prev = None
    for epoch in range(config.max_epochs):
        loss, grad = loss_and_gradient(W, Xb, Y, config.l2)
        if not np.isfinite(loss):
            raise SemframeError(f"loss became non-finite at epoch {epoch}")
        history.append(loss)
        if prev is not None and prev - loss < config.tolerance:
            break
        prev = loss
        W = W - config.learning_rate * grad
    return LogRegModel(classes, W, config.l2, history)


def _logits(model: LogRegModel, features) -> np.ndarray:
    X = _matrix(features)
    if X.shape[1] != model.dim:
        raise DimensionError(f"model expects {model.dim} features, got {X.shape[1]}")
    return _with_bias(X) @ model.weights.T


def predict_proba(model: LogRegModel, features) -> np.ndarray:
    return np.exp(_log_softmax(_logits(model, features)))


def predict(model: LogRegModel, features) -> dict | list:
    """Most probable class per row; ties go to the earlier class.

    Returns {instance id: label} for a FeatureMatrix, else a list.
    """
    best = np.argmax(_logits(model, features), axis=1)
    labels = [model.classes[i] for i in best]
    ids = getattr(features, "instance_ids", None)
    return dict(zip(ids, labels)) if ids is not None else labels
