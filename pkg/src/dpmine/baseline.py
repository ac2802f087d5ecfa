"""Logistic-regression baseline over pattern embeddings, plus the repeated
train/test evaluation protocol (validation-tuned decision threshold)."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .encoder import FeatureMatrix, encode

log = logging.getLogger(__name__)

METRICS = ("precision", "recall", "f1", "auc")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    l2_penalty: float = 1e-3
    seed: int = 0  # first split seed; split k uses seed + k unless redrawn
    class_weight: float | None = None  # weight of positive examples; None means 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ModelError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ModelError("epochs must be >= 1")
        if self.l2_penalty < 0:
            raise ModelError("l2_penalty must be >= 0")
        if self.class_weight is not None and not self.class_weight > 0:
            raise ModelError("class_weight must be > 0")


@dataclass
class Model:
    weights: np.ndarray
    bias: float
    loss_history: list[float] = field(default_factory=list)


def _sample_weights(y, class_weight):
    w = np.ones(len(y))
    if class_weight is not None:
        w[y == 1] = class_weight
    return w


def loss_and_grad(weights, bias, X, y, l2=0.0, sample_weight=None):
    """Weighted mean log-loss plus ``l2 / 2 * ||w||^2`` (bias unpenalised).

    Returns ``(loss, grad_w, grad_b)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sw = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    z = X @ weights + bias
    # log(1 + e^z) - y z, computed stably
    per = np.logaddexp(0.0, z) - y * z
    total = sw.sum()
    loss = float((sw * per).sum() / total + 0.5 * l2 * weights @ weights)
    r = sw * (expit(z) - y) / total
    return loss, X.T @ r + l2 * weights, float(r.sum())


def train(matrix: FeatureMatrix, config: ModelConfig) -> Model:
    """Full-batch gradient descent from zero weights."""
    if matrix.labels is None:
        raise ModelError("feature matrix has no labels")
    y = matrix.labels.astype(float)
    if len(np.unique(y)) < 2:
        raise ModelError("training data contains a single class")
    return _fit(matrix.values.astype(float), y, config)


def _fit(X, y, config: ModelConfig) -> Model:
    w = np.zeros(X.shape[1])
    b = 0.0
    sw = _sample_weights(y, config.class_weight)
    history = []
    for epoch in range(config.epochs):
        loss, gw, gb = loss_and_grad(w, b, X, y, config.l2_penalty, sw)
        history.append(loss)
        w = w - config.learning_rate * gw
        b = b - config.learning_rate * gb
    log.debug("trained %d epochs, loss %.6f -> %.6f", config.epochs, history[0], history[-1])
    return Model(w, b, history)


def predict(model: Model, matrix) -> np.ndarray:
    X = matrix.values if isinstance(matrix, FeatureMatrix) else np.asarray(matrix)
    if X.ndim != 2 or X.shape[1] != len(model.weights):
        raise ModelError(f"expected {len(model.weights)} columns, got shape {X.shape}")
    return expit(X.astype(float) @ model.weights + model.bias)


# -- metrics -------------------------------------------------------------------


def _both_classes(labels):
    labels = np.asarray(labels)
    if labels.size == 0 or labels.min() == labels.max():
        raise ModelError("labels must contain both classes")
    return labels


def auc(probs, labels) -> float:
    """Rank-based ROC AUC (Mann-Whitney), ties counted half."""
    labels = _both_classes(labels).astype(bool)
    ranks = rankdata(np.asarray(probs, dtype=float))
    n_pos = labels.sum()
    n_neg = len(labels) - n_pos
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def precision_recall_f1(pred, labels):
    pred = np.asarray(pred).astype(bool)
    labels = np.asarray(labels).astype(bool)
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def candidate_thresholds(probs) -> np.ndarray:
    u = np.unique(np.asarray(probs, dtype=float))
    return np.concatenate(([0.0], (u[:-1] + u[1:]) / 2, [1.0]))


def tune_threshold(probs, labels) -> float:
    """The candidate threshold (0, 1, and midpoints between adjacent distinct
    probabilities) that maximises F1 of ``probs >= t``; the larger one on ties."""
    labels = _both_classes(labels).astype(bool)
    probs = np.asarray(probs, dtype=float)
    best_t, best = None, Fraction(-1)
    for t in candidate_thresholds(probs):
        pred = probs >= t
        tp = int(np.sum(pred & labels))
        wrong = int(np.sum(pred != labels))
        # exact F1 = 2tp / (2tp + fp + fn) so ties compare equal
        f = Fraction(2 * tp, 2 * tp + wrong) if tp else Fraction(0)
        if f >= best:
            best_t, best = float(t), f
    return best_t


# -- protocol ------------------------------------------------------------------


@dataclass(frozen=True)
class Protocol:
    splits: int = 10
    train_fraction: float = 0.8
    validation_fraction: float = 0.1
    max_redraws: int = 100

    def __post_init__(self):
        if self.splits < 1:
            raise ModelError("splits must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ModelError("train_fraction must be in (0, 1)")
        if not 0 < self.validation_fraction < 1:
            raise ModelError("validation_fraction must be in (0, 1)")


@dataclass
class SplitResult:
    seed: int
    threshold: float
    precision: float
    recall: float
    f1: float
    auc: float


@dataclass
class EvalReport:
    splits: list[SplitResult]
    mean: dict[str, float]
    std: dict[str, float]
    single_split: bool
    n_features: int
    n_rows: int

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_features": self.n_features,
            "single_split": self.single_split,
            "mean": self.mean,
            "std": self.std,
            "splits": [asdict(s) for s in self.splits],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_table(self, model_name: str = "Logistic", features: str = "Patterns") -> str:
        head = ["Model", "Features Space", "Precision(%)", "Recall(%)", "F1(%)", "AUC(%)"]
        cells = [model_name, features] + [
            f"{100 * self.mean[m]:.2f} (± {100 * self.std[m]:.2f})" for m in METRICS
        ]
        widths = [max(len(h), len(c)) for h, c in zip(head, cells)]
        fmt = " | ".join("{:<%d}" % w for w in widths)
        lines = [fmt.format(*head), "-+-".join("-" * w for w in widths), fmt.format(*cells)]
        if self.single_split:
            lines.append("(single split: std reported as 0)")
        return "\n".join(lines) + "\n"


def _draw(n, labels, protocol: Protocol, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(round(protocol.train_fraction * n))
    train_idx, test_idx = order[:n_train], order[n_train:]
    n_val = int(round(protocol.validation_fraction * len(train_idx)))
    val_idx, fit_idx = train_idx[:n_val], train_idx[n_val:]
    for part in (fit_idx, val_idx, test_idx):
        if len(np.unique(labels[part])) < 2:
            return None
    return fit_idx, val_idx, test_idx


def evaluate_matrix(matrix: FeatureMatrix, model_config: ModelConfig,
                    protocol: Protocol | None = None) -> EvalReport:
    """Repeated random splits: fit on train minus validation, pick the F1
    threshold on validation, score on test."""
    protocol = protocol or Protocol()
    if matrix.labels is None:
        raise ModelError("feature matrix has no labels")
    X = matrix.values.astype(float)
    y = matrix.labels.astype(int)
    # fit, validation and test each need both classes
    counts = np.bincount(y, minlength=2)
    if counts.min() < 3:
        raise ModelError(f"each class needs at least 3 rows to split, got {counts[1]} positive / {counts[0]} negative")
    results = []
    seed = model_config.seed
    redraws = 0
    for _ in range(protocol.splits):
        for attempt in range(protocol.max_redraws):
            parts = _draw(len(y), y, protocol, seed)
            if parts is not None:
                break
            log.debug("split with seed %d lacks a class in some part; redrawing", seed)
            redraws += 1
            seed += 1
        else:
            raise ModelError(f"could not draw a split with both classes after {protocol.max_redraws} tries")
        fit_idx, val_idx, test_idx = parts
        model = _fit(X[fit_idx], y[fit_idx].astype(float), model_config)
        t = tune_threshold(predict(model, X[val_idx]), y[val_idx])
        p_test = predict(model, X[test_idx])
        p, r, f = precision_recall_f1(p_test >= t, y[test_idx])
        results.append(SplitResult(seed, t, p, r, f, auc(p_test, y[test_idx])))
        seed += 1

    if redraws:
        log.warning("%d split(s) lacked a class in some part and were redrawn", redraws)
    single = len(results) == 1
    mean = {m: float(np.mean([getattr(s, m) for s in results])) for m in METRICS}
    std = {m: 0.0 if single else float(np.std([getattr(s, m) for s in results], ddof=1)) for m in METRICS}
    return EvalReport(results, mean, std, single, X.shape[1], X.shape[0])


def evaluate(db, patterns, model_config: ModelConfig, protocol: Protocol | None = None,
             mode: str = "plain", constraints=None) -> EvalReport:
    return evaluate_matrix(encode(db, patterns, mode, constraints), model_config, protocol)
