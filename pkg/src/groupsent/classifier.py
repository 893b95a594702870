"""Linear one-vs-rest SVM trained by stochastic subgradient descent.

Each binary problem minimizes::

    lam/2 * ||w||^2 + 1/n * sum_i max(0, 1 - y_i (w . x_i + b))

on standardized features with per-example updates and step size
``eta0 / (1 + lam * t)``, ``t`` counting updates from zero.  The bias is not
regularized.  Example order for every epoch comes from
``numpy.random.Generator(numpy.random.Philox(seed))``: epoch ``e`` uses the
``e``-th call to ``permutation(n)``.  All binary problems share the same
orders, so results do not depend on the order classes are trained in.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

FORMAT_VERSION = 1


def standardize(features, mean, std) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if features.shape[-1] != mean.shape[-1] or mean.shape != std.shape:
        raise ValueError(
            f"dimension mismatch: features {features.shape[-1]}, "
            f"mean {mean.shape}, std {std.shape}"
        )
    return (features - mean) / std


def fit_standardization(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


def epoch_orders(n: int, epochs: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    return np.stack([rng.permutation(n) for _ in range(epochs)]) if epochs else np.zeros((0, n), int)


def hinge_objective(w, b, X, y, lam) -> float:
    margins = y * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.maximum(0.0, 1.0 - margins).mean())


def fit_binary(X, y, lam, eta0, orders, callback=None):
    """Subgradient descent for one +/-1 problem; returns ``(w, b)``."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    t = 0
    for epoch, order in enumerate(orders):
        for i in order:
            eta = eta0 / (1.0 + lam * t)
            xi = X[i]
            yi = y[i]
            if yi * (xi @ w + b) < 1.0:
                w = (1.0 - eta * lam) * w + (eta * yi) * xi
                b += eta * yi
            else:
                w = (1.0 - eta * lam) * w
            t += 1
        if callback is not None:
            callback(epoch, w, b)
    return w, b


@dataclass
class LinearModel:
    classes: list
    weights: np.ndarray
    bias: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        self.feature_mean = np.asarray(self.feature_mean, dtype=np.float64)
        self.feature_std = np.asarray(self.feature_std, dtype=np.float64)
        if self.weights.shape[0] != len(self.classes) or self.bias.shape != (len(self.classes),):
            raise ValueError("one weight vector and one bias per class required")
        if np.any(self.feature_std <= 0):
            raise ValueError("feature_std entries must be positive")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model parameters must be finite")

    @property
    def n_features(self) -> int:
        return self.feature_mean.shape[0]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "classes": [_plain(c) for c in self.classes],
            "mean": self.feature_mean.tolist(),
            "std": self.feature_std.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearModel":
        if obj.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format_version {obj.get('format_version')!r}")
        return cls(
            classes=list(obj["classes"]),
            weights=np.array(obj["weights"], dtype=np.float64).reshape(len(obj["classes"]), -1),
            bias=obj["bias"],
            feature_mean=obj["mean"],
            feature_std=obj["std"],
            config=obj.get("config", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LinearModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _plain(v: Any):
    if isinstance(v, np.generic):
        return v.item()
    return v


def train(X, y, lam: float = 1e-4, epochs: int = 100, eta0: float = 0.01, seed: int = 0,
          callback=None) -> LinearModel:
    """Fit a one-vs-rest model; ``callback(cls, epoch, w, b)`` sees standardized-space weights."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training examples")
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    mean, std = fit_standardization(X)
    Z = standardize(X, mean, std)
    orders = epoch_orders(len(Z), epochs, seed)
    W = np.zeros((len(classes), Z.shape[1]))
    B = np.zeros(len(classes))
    for k, c in enumerate(classes):
        target = np.where(y == c, 1.0, -1.0)
        cb = None if callback is None else (lambda e, w, b, c=c: callback(c, e, w, b))
        W[k], B[k] = fit_binary(Z, target, lam, eta0, orders, cb)
    config = {"lambda": lam, "epochs": epochs, "eta0": eta0, "seed": seed}
    return LinearModel(classes, W, B, mean, std, config)


def decision_values(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    scores = standardize(X, model.feature_mean, model.feature_std) @ model.weights.T + model.bias
    return scores[0] if single else scores


def predict(model: LinearModel, X):
    scores = decision_values(model, X)
    # classes are sorted, and argmax returns the first maximum: ties go to the lower label
    idx = np.argmax(scores, axis=-1)
    if np.ndim(idx) == 0:
        return model.classes[int(idx)]
    return np.array([model.classes[i] for i in idx])


def split(X, y, test_fraction: float = 0.2, seed: int = 0):
    """Seeded train/test split, stratified when every class has two or more members.

    Returns ``(train_idx, test_idx)``, both sorted.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(y)
    n = len(y)
    if n < 2:
        raise ValueError("need at least 2 items to split")
    rng = np.random.Generator(np.random.Philox(seed))
    labels, counts = np.unique(y, return_counts=True)
    test = []
    total = min(max(int(np.floor(test_fraction * n + 0.5)), 1), n - 1)
    if np.all(counts >= 2):
        # largest-remainder allocation: per-class sizes sum to the overall target
        quota = test_fraction * counts
        take = np.floor(quota).astype(int)
        for k in np.argsort(-(quota - take), kind="stable")[: max(total - take.sum(), 0)]:
            take[k] += 1
        take = np.clip(take, 0, counts - 1)
        for lab, k in zip(labels, take):
            members = np.flatnonzero(y == lab)
            test.extend(members[rng.permutation(len(members))][:k].tolist())
    else:
        test = rng.permutation(n)[:total].tolist()
    test_idx = np.array(sorted(test), dtype=int)
    train_idx = np.setdiff1d(np.arange(n), test_idx)
    return train_idx, test_idx


class LinearSVM(BaseEstimator, ClassifierMixin):
    """scikit-learn compatible wrapper around :func:`train`."""

    def __init__(self, lam=1e-4, epochs=100, eta0=0.01, random_state=0):
        self.lam = lam
        self.epochs = epochs
        self.eta0 = eta0
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.model_ = train(X, y, self.lam, self.epochs, self.eta0, int(self.random_state))
        self.classes_ = np.array(self.model_.classes)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return decision_values(self.model_, X)

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self.classes_[np.argmax(decision_values(self.model_, X), axis=1)]

    @classmethod
    def from_model(cls, model: LinearModel) -> "LinearSVM":
        cfg = model.config
        est = cls(cfg.get("lambda", 1e-4), cfg.get("epochs", 100), cfg.get("eta0", 0.01),
                  cfg.get("seed", 0))
        est.model_ = model
        est.classes_ = np.array(model.classes)
        est.n_features_in_ = model.n_features
        return est
