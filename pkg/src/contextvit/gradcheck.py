"""Finite-difference verification of the analytic gradients.

Central differences with step 1e-5 in float64. Errors are reported as
|analytic - numeric| / max(|analytic|, |numeric|) per coordinate, falling back
to the absolute difference when both magnitudes sit below a small floor (so
exactly-zero gradients do not blow up the ratio).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model.attention import AttentionParams, gc_attention, gc_attention_backward
from .model.config import ModelConfig, desk_tiny_config
from .model.network import Model, backward, forward_with_cache
from .training.losses import smoothed_cross_entropy, smoothed_cross_entropy_backward

DEFAULT_STEP = 1e-5
ATTENTION_TOLERANCE = 1e-4
LOSS_TOLERANCE = 1e-6
END_TO_END_TOLERANCE = 1e-3
_REL_FLOOR = 1e-6


@dataclass
class GradCheckResult:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return f"{self.name:<28} max rel err {self.max_rel_error:.3e}  (tol {self.tolerance:.0e})  {status}"


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    diff = np.abs(analytic - numeric)
    rel = np.where(denom > _REL_FLOOR, diff / np.maximum(denom, _REL_FLOOR), diff)
    return float(rel.max()) if rel.size else 0.0


def finite_difference(func, array: np.ndarray, indices=None, step: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference d(func)/d(array) at flat ``indices`` (all by default).

    ``func`` must be a no-argument callable reading ``array``; the array is
    perturbed in place and restored.
    """
    flat = array.reshape(-1)
    indices = list(range(flat.size)) if indices is None else list(indices)
    grads = np.zeros(len(indices))
    for pos, idx in enumerate(indices):
        original = flat[idx]
        flat[idx] = original + step
        up = func()
        flat[idx] = original - step
        down = func()
        flat[idx] = original
        grads[pos] = (up - down) / (2.0 * step)
    return grads


def check_attention_gradients(seed: int = 0, n_tokens: int = 6, dim: int = 8,
                              num_heads: int = 2) -> GradCheckResult:
    """Full-coordinate check of every attention parameter and the token input."""
    rng = np.random.default_rng([seed, 11])
    tokens = rng.standard_normal((n_tokens + 1, dim)) * 0.5
    params = AttentionParams.init(dim, rng)
    for _, arr in params.named_arrays():
        arr += rng.standard_normal(arr.shape) * 0.3   # move off the tiny init scale
    probe = rng.standard_normal((n_tokens + 1, dim))

    def loss() -> float:
        out, _ = gc_attention(tokens, params, num_heads)
        return float((out * probe).sum())

    _, cache = gc_attention(tokens, params, num_heads)
    dtokens, dparams = gc_attention_backward(probe, cache)

    worst = 0.0
    for (_, analytic), (_, arr) in zip(dparams.named_arrays(), params.named_arrays()):
        numeric = finite_difference(loss, arr)
        worst = max(worst, relative_error(analytic.reshape(-1), numeric))
    numeric_tokens = finite_difference(loss, tokens)
    worst = max(worst, relative_error(dtokens.reshape(-1), numeric_tokens))
    return GradCheckResult("gc_attention", worst, ATTENTION_TOLERANCE)


def check_loss_gradient(seed: int = 0, num_classes: int = 12) -> GradCheckResult:
    rng = np.random.default_rng([seed, 12])
    logits = rng.standard_normal(num_classes) * 2.0
    label = int(rng.integers(num_classes))
    eps = 0.1

    analytic = smoothed_cross_entropy_backward(logits, label, eps)
    numeric = finite_difference(lambda: smoothed_cross_entropy(logits, label, eps), logits)
    return GradCheckResult("smoothed_cross_entropy", relative_error(analytic.reshape(-1), numeric),
                           LOSS_TOLERANCE)


def check_end_to_end(seed: int = 0, cfg: ModelConfig | None = None,
                     coords_per_tensor: int = 4, corrupt: bool = False) -> GradCheckResult:
    """Image -> network -> smoothed CE, sampled coordinates of every tensor.

    ``corrupt`` deliberately biases one analytic gradient (negative control
    for the verification harness itself).
    """
    cfg = cfg or desk_tiny_config()
    model = Model.init(cfg, seed=seed)
    rng = np.random.default_rng([seed, 13])
    image = rng.uniform(-1.0, 1.0, size=(*cfg.input_size, 3))
    label = int(rng.integers(cfg.num_classes))
    eps = 0.1

    def loss() -> float:
        logits, _ = forward_with_cache(image, model)
        return smoothed_cross_entropy(logits, label, eps)

    logits, cache = forward_with_cache(image, model)
    grads = backward(smoothed_cross_entropy_backward(logits, label, eps), cache)
    grad_by_name = dict(grads.named_arrays())
    if corrupt:
        first = next(iter(grad_by_name))
        grad_by_name[first] = grad_by_name[first] + 0.5

    worst = 0.0
    for name, arr in model.named_arrays():
        k = min(coords_per_tensor, arr.size)
        indices = sorted(rng.choice(arr.size, size=k, replace=False).tolist())
        numeric = finite_difference(loss, arr, indices=indices)
        analytic = grad_by_name[name].reshape(-1)[indices]
        worst = max(worst, relative_error(analytic, numeric))
    return GradCheckResult("end_to_end_desk_tiny", worst, END_TO_END_TOLERANCE)


def run_gradcheck(seed: int = 0, corrupt: bool = False) -> list[GradCheckResult]:
    """The three standard checks; all must pass for a healthy build."""
    return [
        check_attention_gradients(seed=seed),
        check_loss_gradient(seed=seed),
        check_end_to_end(seed=seed, corrupt=corrupt),
    ]
