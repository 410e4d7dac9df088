"""Learning-rate schedules, stepped once per epoch."""

from __future__ import annotations

import math
from collections.abc import Sequence


def cosine_lr(t: int, total: int, lr_min: float, lr_max: float) -> float:
    """Half-cosine decay: lr_min + (lr_max - lr_min) * (1 + cos(pi * t / total)) / 2.

    ``t`` counts epochs in [0, total]; the endpoints evaluate to exactly
    lr_max and lr_min.
    """
    if total < 1:
        raise ValueError(f"total epochs must be >= 1, got {total}")
    if not (0 <= t <= total):
        raise ValueError(f"epoch index {t} outside [0, {total}]")
    if lr_min > lr_max:
        raise ValueError(f"lr_min {lr_min} exceeds lr_max {lr_max}")
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * t / total))


def step_lr(t: int, milestones: Sequence[int], gamma: float, lr_max: float) -> float:
    """Multiply lr_max by gamma once per milestone already reached (<= t)."""
    ms = list(milestones)
    if ms != sorted(ms):
        raise ValueError(f"milestones must be ascending, got {milestones}")
    passed = sum(1 for m in ms if m <= t)
    return lr_max * gamma**passed
