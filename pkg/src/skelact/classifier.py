"""Per-view softmax classifiers over downsampled pseudo-colored motion maps.

One multinomial logistic model per view (front/side/top), trained with
mini-batch gradient descent on cross-entropy; inputs are area-averaged
to a fixed square resolution, flattened, and standardized per feature.
At inference the three per-view class posteriors are averaged and the
argmax (lower symbol on ties) labels the segment.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dmm import VIEWS
from .errors import DataError


@dataclass(frozen=True)
class ClassifierTrainConfig:
    downsample: int = 32
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 0.1
    lr_decay: float = 0.02
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.downsample < 1 or self.epochs < 1 or self.batch_size < 1:
            raise DataError("classifier training sizes must be positive")
        if self.learning_rate <= 0 or self.l2 < 0 or self.lr_decay < 0:
            raise DataError("bad classifier training hyperparameters")


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Exact area-average resampling weights, shape (n_out, n_in); each
    output cell averages the input span it covers, fractions included."""
    w = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(j0, min(j1, n_in)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                w[i, j] = overlap / scale
    return w


def area_downsample(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-average a (H, W) or (H, W, C) image to (out_h, out_w[, C])."""
    img = np.asarray(image, dtype=np.float64)
    rw = _area_weights(img.shape[0], out_h)
    cw = _area_weights(img.shape[1], out_w)
    if img.ndim == 2:
        return rw @ img @ cw.T
    if img.ndim == 3:
        rows = np.tensordot(rw, img, axes=([1], [0]))     # (out_h, W, C)
        cols = np.tensordot(rows, cw, axes=([1], [1]))    # (out_h, C, out_w)
        return np.moveaxis(cols, 1, 2)
    raise DataError(f"cannot downsample array of shape {img.shape}")


@dataclass
class SoftmaxModel:
    """Multinomial logistic regression over standardized features."""

    weights: np.ndarray    # (K, F)
    bias: np.ndarray       # (K,)
    feat_mean: np.ndarray  # (F,)
    feat_std: np.ndarray   # (F,)

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        z = (X - self.feat_mean) / self.feat_std
        logits = z @ self.weights.T + self.bias
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        return p


def softmax_loss_and_grad(weights: np.ndarray, bias: np.ndarray,
                          X: np.ndarray, y: np.ndarray,
                          l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy + L2 penalty, with analytic gradients."""
    n = X.shape[0]
    logits = X @ weights.T + bias
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    probs = expl / expl.sum(axis=1, keepdims=True)
    loss = -np.log(probs[np.arange(n), y] + 1e-300).mean()
    loss += 0.5 * l2 * (weights ** 2).sum()
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    grad_w = delta.T @ X / n + l2 * weights
    grad_b = delta.mean(axis=0)
    return float(loss), grad_w, grad_b


def _fit_softmax(X: np.ndarray, y: np.ndarray, n_classes: int,
                 cfg: ClassifierTrainConfig,
                 rng: np.random.Generator) -> tuple[SoftmaxModel, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-8] = 1.0
    z = (X - mean) / std
    n, f = z.shape
    weights = np.zeros((n_classes, f))
    bias = np.zeros(n_classes)
    losses = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate / (1.0 + cfg.lr_decay * epoch)
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            _, gw, gb = softmax_loss_and_grad(weights, bias, z[idx], y[idx],
                                              cfg.l2)
            weights -= lr * gw
            bias -= lr * gb
        losses[epoch], _, _ = softmax_loss_and_grad(weights, bias, z, y,
                                                    cfg.l2)
    model = SoftmaxModel(weights=weights, bias=bias, feat_mean=mean,
                         feat_std=std)
    return model, losses


@dataclass
class SegmentClassifierModel:
    """Three per-view softmax models sharing a symbol alphabet."""

    views: dict[str, SoftmaxModel]
    n_classes: int
    downsample: int
    loss_history: dict[str, np.ndarray] = field(default_factory=dict)

    def _features(self, view: str, images: list[np.ndarray]) -> np.ndarray:
        flat = [area_downsample(img, self.downsample, self.downsample).ravel()
                for img in images]
        return np.asarray(flat)


def train_segment_classifier(triples: list[dict[str, np.ndarray]],
                             labels: np.ndarray | list[int], n_classes: int,
                             cfg: ClassifierTrainConfig | None = None) -> SegmentClassifierModel:
    """Fit the three view models on pseudo-colored DMM triples.

    ``triples`` maps each view name to an (H, W, 3) image per segment;
    every symbol in [0, n_classes) must appear at least once.
    """
    if cfg is None:
        cfg = ClassifierTrainConfig()
    y = np.asarray(labels, dtype=np.int64)
    if n_classes < 2:
        raise DataError("need at least 2 symbols")
    if len(triples) != len(y) or len(y) == 0:
        raise DataError("labels and image triples must align and be non-empty")
    present = set(np.unique(y).tolist())
    missing = sorted(set(range(n_classes)) - present)
    if missing:
        raise DataError(f"training set is missing symbols {missing}")

    model = SegmentClassifierModel(views={}, n_classes=n_classes,
                                   downsample=cfg.downsample)
    rng = np.random.default_rng(cfg.seed)
    for view in VIEWS:
        feats = model._features(view, [t[view] for t in triples])
        sm, losses = _fit_softmax(feats, y, n_classes, cfg, rng)
        model.views[view] = sm
        model.loss_history[view] = losses
    return model


def classify_segment(model: SegmentClassifierModel,
                     triple: dict[str, np.ndarray]) -> tuple[int, np.ndarray]:
    """Average the three per-view posteriors; argmax is the symbol
    (lower symbol wins ties)."""
    missing = [v for v in VIEWS if v not in triple]
    if missing:
        raise DataError(f"triple is missing views {missing}")
    total = np.zeros(model.n_classes)
    for view in VIEWS:
        feats = model._features(view, [triple[view]])
        total += model.views[view].probabilities(feats)[0]
    mean = total / len(VIEWS)
    return int(np.argmax(mean)), mean


def classify_segments(model: SegmentClassifierModel,
                      triples: list[dict[str, np.ndarray]]) -> np.ndarray:
    """Vectorized symbol assignment for many segments."""
    if not triples:
        return np.empty(0, dtype=np.int64)
    total = np.zeros((len(triples), model.n_classes))
    for view in VIEWS:
        feats = model._features(view, [t[view] for t in triples])
        total += model.views[view].probabilities(feats)
    return total.argmax(axis=1)
