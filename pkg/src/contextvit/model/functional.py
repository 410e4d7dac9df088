"""Low-level differentiable primitives used by the model.

Every forward function that participates in backprop has a matching
``*_backward`` that consumes the values saved by the forward pass. All math is
float64; softmax uses max-subtraction so large logits do not overflow.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis``."""
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(probs: np.ndarray, grad_out: np.ndarray, axis: int = -1) -> np.ndarray:
    """Gradient of softmax given its output ``probs`` and upstream ``grad_out``."""
    inner = np.sum(grad_out * probs, axis=axis, keepdims=True)
    return probs * (grad_out - inner)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-CDF GELU: ``x * Phi(x)``."""
    return x * 0.5 * (1.0 + erf(x * _INV_SQRT2))


def gelu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return grad_out * (cdf + x * pdf)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-6):
    """Normalize the last axis of ``x``; returns (output, cache for backward)."""
    mean = np.mean(x, axis=-1, keepdims=True)
    var = np.var(x, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    out = gamma * x_hat + beta
    return out, (x_hat, inv_std, gamma)


def layer_norm_backward(grad_out: np.ndarray, cache):
    x_hat, inv_std, gamma = cache
    d = x_hat.shape[-1]
    dgamma = np.sum(grad_out * x_hat, axis=tuple(range(grad_out.ndim - 1)))
    dbeta = np.sum(grad_out, axis=tuple(range(grad_out.ndim - 1)))
    dx_hat = grad_out * gamma
    dx = inv_std * (
        dx_hat
        - np.mean(dx_hat, axis=-1, keepdims=True)
        - x_hat * np.mean(dx_hat * x_hat, axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


def linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Affine map on the last axis: ``x @ weight (+ bias)``. ``weight`` is (in, out)."""
    out = x @ weight
    if bias is not None:
        out = out + bias
    return out


def linear_backward(x: np.ndarray, weight: np.ndarray, grad_out: np.ndarray):
    """Returns (dx, dweight, dbias) for :func:`linear`."""
    x2 = x.reshape(-1, x.shape[-1])
    g2 = grad_out.reshape(-1, grad_out.shape[-1])
    dweight = x2.T @ g2
    dbias = g2.sum(axis=0)
    dx = grad_out @ weight.T
    return dx.reshape(x.shape), dweight, dbias


def truncated_normal(rng: np.random.Generator, shape, std: float = 0.02) -> np.ndarray:
    """Gaussian samples with |z| <= 2 std, the usual transformer weight init."""
    out = rng.standard_normal(shape)
    for _ in range(8):
        bad = np.abs(out) > 2.0
        if not bad.any():
            break
        out[bad] = rng.standard_normal(int(bad.sum()))
    return np.clip(out, -2.0, 2.0) * std


def fan_in_normal(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Truncated normal with std 1/sqrt(fan_in).

    At desk-scale widths a flat small std starves the forward signal (block
    outputs become negligible against the residual stream), so projection
    inits scale with their input dimension instead.
    """
    return truncated_normal(rng, shape, std=1.0 / np.sqrt(fan_in))
