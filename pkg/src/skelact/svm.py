"""One-vs-rest linear SVM trained by deterministic subgradient descent.

Each class gets a binary max-margin separator minimizing the
L2-regularized hinge loss

    lambda/2 ||w||^2 + (1/n) sum_i max(0, 1 - y_i (w.x_i + b))

with lambda = 1 / (C n), full-batch subgradient steps of size
1 / (lambda t), and the averaged iterate as the returned solution.
Features are standardized before training; prediction is the argmax of
the class scores with ties broken toward the lower class id.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class SvmModel:
    weights: np.ndarray      # (C, F)
    bias: np.ndarray         # (C,)
    classes: list            # class ids in score order
    feat_mean: np.ndarray
    feat_std: np.ndarray
    c: float

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = (X - self.feat_mean) / self.feat_std
        return z @ self.weights.T + self.bias


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                    lam: float) -> float:
    """Regularized hinge loss for one binary problem (y in {-1, +1})."""
    margins = 1.0 - y * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.maximum(margins, 0.0).mean())


def _fit_binary(X: np.ndarray, y: np.ndarray, lam: float,
                epochs: int) -> tuple[np.ndarray, float, np.ndarray]:
    """Subgradient descent on the hinge objective; returns the averaged
    iterate and the objective evaluated at the running average per epoch."""
    n, f = X.shape
    w = np.zeros(f)
    b = 0.0
    w_avg = np.zeros(f)
    b_avg = 0.0
    avg_objectives = np.empty(epochs)
    for t in range(1, epochs + 1):
        margins = y * (X @ w + b)
        viol = margins < 1.0
        grad_w = lam * w - (y[viol] @ X[viol]) / n
        grad_b = -y[viol].sum() / n
        eta = 1.0 / (lam * t)
        w = w - eta * grad_w
        b = b - eta * grad_b
        w_avg += (w - w_avg) / t
        b_avg += (b - b_avg) / t
        avg_objectives[t - 1] = hinge_objective(w_avg, b_avg, X, y, lam)
    return w_avg, b_avg, avg_objectives


def train_svm(X: np.ndarray, labels, c: float = 1.0, epochs: int = 200,
              seed: int = 0) -> SvmModel:
    """Fit one-vs-rest linear SVMs. ``seed`` is accepted for interface
    stability; the full-batch solver is already deterministic."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise DataError("X must be a non-empty 2D matrix")
    if c <= 0 or epochs < 1:
        raise DataError("need C > 0 and epochs >= 1")
    y = np.asarray(labels)
    if len(y) != len(X):
        raise DataError("labels must align with X")
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise DataError(f"need at least 2 classes, got {classes}")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-12] = 1.0
    z = (X - mean) / std

    lam = 1.0 / (c * len(X))
    weights = np.zeros((len(classes), X.shape[1]))
    bias = np.zeros(len(classes))
    for i, cls in enumerate(classes):
        target = np.where(y == cls, 1.0, -1.0)
        weights[i], bias[i], _ = _fit_binary(z, target, lam, epochs)
    return SvmModel(weights=weights, bias=bias, classes=classes,
                    feat_mean=mean, feat_std=std, c=c)


def svm_predict(model: SvmModel, X: np.ndarray):
    """Predicted class per row (argmax score, lower class id on ties)."""
    scores = model.scores(X)
    idx = scores.argmax(axis=1)
    preds = [model.classes[i] for i in idx]
    if np.ndim(X) == 1:
        return preds[0]
    return preds
