"""AdamW with decoupled weight decay over named parameter tensors.

The decay is applied directly to the weights (theta -= lr * wd * theta),
separate from the Adam direction, which uses the standard bias-corrected
first/second moments with beta1=0.9, beta2=0.999, eps=1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericsError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamWState:
    """Per-tensor first/second moments plus the shared step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def init(cls, named_params) -> "AdamWState":
        state = cls()
        for name, arr in named_params:
            state.m[name] = np.zeros_like(arr)
            state.v[name] = np.zeros_like(arr)
        return state


def adamw_step(
    state: AdamWState,
    named_params,
    named_grads: dict[str, np.ndarray],
    lr: float,
    weight_decay: float = 0.0,
) -> AdamWState:
    """Update every parameter tensor in place and advance the step counter.

    ``named_params`` yields (name, tensor); ``named_grads`` maps the same
    names to gradients. Non-finite gradients abort before touching anything.
    """
    pairs = list(named_params)
    for name, _ in pairs:
        grad = named_grads[name]
        if not np.isfinite(grad).all():
            raise NumericsError(f"non-finite gradient for {name}")

    state.step += 1
    t = state.step
    bias1 = 1.0 - ADAM_BETA1**t
    bias2 = 1.0 - ADAM_BETA2**t
    for name, param in pairs:
        grad = named_grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad * grad
        if weight_decay != 0.0:
            param -= lr * weight_decay * param
        param -= lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
    return state
