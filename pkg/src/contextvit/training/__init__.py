from .loop import (
    EPOCH_LOG_HEADER,
    EpochRecord,
    FitResult,
    TrainConfig,
    TrainState,
    early_stop_update,
    fit,
    load_epoch_log,
    save_epoch_log,
)
from .losses import smoothed_cross_entropy, smoothed_cross_entropy_backward
from .optimizer import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, AdamWState, adamw_step
from .schedules import cosine_lr, step_lr

__all__ = [
    "ADAM_BETA1",
    "ADAM_BETA2",
    "ADAM_EPS",
    "AdamWState",
    "EPOCH_LOG_HEADER",
    "EpochRecord",
    "FitResult",
    "TrainConfig",
    "TrainState",
    "adamw_step",
    "cosine_lr",
    "early_stop_update",
    "fit",
    "load_epoch_log",
    "save_epoch_log",
    "smoothed_cross_entropy",
    "smoothed_cross_entropy_backward",
    "step_lr",
]
