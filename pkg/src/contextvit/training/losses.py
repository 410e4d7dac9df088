"""Label-smoothed cross-entropy.

With smoothing eps, the target distribution is
``q_k = (1 - eps) * [k == label] + eps / C`` and the loss is ``-sum q_k log
softmax(logits)_k``, computed through log-sum-exp so huge logits stay finite.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, NumericsError


def _check(logits: np.ndarray, label: int, eps: float):
    if logits.ndim != 1 or logits.shape[0] < 2:
        raise DimensionError(f"logits must be a vector of length >= 2, got shape {logits.shape}")
    if not (0 <= label < logits.shape[0]):
        raise DimensionError(f"label {label} out of range for {logits.shape[0]} classes")
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"smoothing must be in [0, 1), got {eps}")
    if not np.isfinite(logits).all():
        raise NumericsError("non-finite logits")


def smoothed_cross_entropy(logits: np.ndarray, label: int, eps: float) -> float:
    _check(logits, label, eps)
    c = logits.shape[0]
    shifted = logits - logits.max()
    lse = np.log(np.exp(shifted).sum()) + logits.max()
    expected_logit = (1.0 - eps) * logits[label] + (eps / c) * logits.sum()
    return float(lse - expected_logit)


def smoothed_cross_entropy_backward(logits: np.ndarray, label: int, eps: float) -> np.ndarray:
    """d(loss)/d(logits) = softmax(logits) - q; entries sum to zero."""
    _check(logits, label, eps)
    c = logits.shape[0]
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    grad = probs.copy()
    grad -= eps / c
    grad[label] -= 1.0 - eps
    return grad
