"""Confusion matrix and the derived classification report.

Convention: rows index the true class, columns the predicted class. Zero
denominators (a class never predicted, or with no support) yield metric 0 and
set a per-class flag instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError


@dataclass
class ConfusionMatrix:
    counts: np.ndarray                 # (C, C) ints, rows = true, cols = predicted
    class_names: list[str]

    def __post_init__(self):
        c = len(self.class_names)
        if self.counts.shape != (c, c):
            raise DimensionError(f"counts shape {self.counts.shape} vs {c} classes")
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def confusion_matrix(predictions, labels, num_classes: int,
                     class_names: list[str] | None = None) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a C x C integer matrix."""
    predictions = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise DimensionError(
            f"predictions {predictions.shape} and labels {labels.shape} must be equal-length vectors"
        )
    if predictions.size and (
        predictions.min() < 0 or predictions.max() >= num_classes
        or labels.min() < 0 or labels.max() >= num_classes
    ):
        raise DimensionError(f"class index outside [0, {num_classes})")
    if class_names is None:
        class_names = [f"class_{i:02d}" for i in range(num_classes)]

    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (labels, predictions), 1)
    return ConfusionMatrix(counts=counts, class_names=class_names)


@dataclass
class ClassificationReport:
    class_names: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total: int
    degenerate: list[str] = field(default_factory=list)   # classes hit by zero denominators


def _safe_divide(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zero = den == 0
    out = np.where(zero, 0.0, num / np.where(zero, 1, den))
    return out, zero


def report(matrix: ConfusionMatrix) -> ClassificationReport:
    """Per-class precision/recall/F1 plus accuracy and macro/weighted averages."""
    counts = matrix.counts.astype(np.float64)
    total = matrix.total
    if total < 1:
        raise ValueError("report needs at least one evaluated sample")

    tp = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    precision, p_zero = _safe_divide(tp, predicted)
    recall, r_zero = _safe_divide(tp, support)
    f1, f_zero = _safe_divide(2 * precision * recall, precision + recall)

    degenerate = sorted(
        {matrix.class_names[i] for i in np.flatnonzero(p_zero | r_zero | f_zero)}
    )
    weights = support / total
    return ClassificationReport(
        class_names=list(matrix.class_names),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support.astype(np.int64),
        accuracy=float(tp.sum() / total),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((weights * precision).sum()),
        weighted_recall=float((weights * recall).sum()),
        weighted_f1=float((weights * f1).sum()),
        total=total,
        degenerate=degenerate,
    )


def per_class_accuracy(matrix: ConfusionMatrix) -> np.ndarray:
    """Diagonal over support; identical to per-class recall, 0 where support is 0."""
    tp = np.diag(matrix.counts).astype(np.float64)
    acc, _ = _safe_divide(tp, matrix.support.astype(np.float64))
    return acc
