"""Epoch loop: shuffled mini-batches, AdamW updates, validation, early stopping.

All randomness derives from one master seed through labeled streams, so a
(seed, config) pair maps to exactly one training trajectory:

    shuffle rng  <- [seed, STREAM_SHUFFLE, epoch]
    augment rng  <- [seed, STREAM_AUGMENT, epoch, sample_index]

The best parameter snapshot is selected on validation accuracy (ties keep the
earliest epoch) and is returned alongside the full per-epoch record list.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data.augment import AugmentPolicy, augment_train, normalize, preprocess_eval
from ..data.images import ImageTensor, read_ppm
from ..data.manifest import STREAM_AUGMENT, STREAM_SHUFFLE, DatasetManifest
from ..errors import DatasetError, NumericsError
from ..model.network import Model, backward, forward_with_cache
from .losses import smoothed_cross_entropy, smoothed_cross_entropy_backward
from .optimizer import AdamWState, adamw_step
from .schedules import cosine_lr, step_lr


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 100
    lr_max: float = 1e-4
    lr_min: float = 0.0
    weight_decay: float = 1e-4
    label_smoothing: float = 0.1
    patience: int = 5
    seed: int = 0
    schedule_kind: str = "cosine"              # "cosine" or "step"
    step_milestones: tuple[int, ...] = ()      # used by the step schedule only
    step_gamma: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "step_milestones", tuple(self.step_milestones))
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if not (0.0 <= self.label_smoothing < 1.0):
            raise ValueError("label_smoothing must be in [0, 1)")
        if self.lr_min > self.lr_max:
            raise ValueError("lr_min must not exceed lr_max")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.schedule_kind not in ("cosine", "step"):
            raise ValueError(f"unknown schedule kind {self.schedule_kind!r}")

    def learning_rate(self, epoch: int) -> float:
        if self.schedule_kind == "cosine":
            return cosine_lr(epoch, max(self.max_epochs, 1), self.lr_min, self.lr_max)
        return step_lr(epoch, self.step_milestones, self.step_gamma, self.lr_max)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float
    learning_rate: float


@dataclass
class TrainState:
    """Mutable bookkeeping carried across epochs."""

    model: Model
    optimizer: AdamWState
    epoch: int = 0
    best_val_metric: float = -np.inf
    best_epoch: int = -1
    best_model: Model | None = None
    epochs_since_improvement: int = 0
    seed: int = 0


def early_stop_update(state: TrainState, val_metric: float, patience: int) -> tuple[TrainState, bool]:
    """Track the best validation metric; signal a stop after ``patience`` flat epochs.

    Improvement means strictly greater than the current best; it resets the
    counter and snapshots the parameters.
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    if val_metric > state.best_val_metric:
        state.best_val_metric = val_metric
        state.best_epoch = state.epoch
        state.best_model = state.model.copy()
        state.epochs_since_improvement = 0
    else:
        state.epochs_since_improvement += 1
    return state, state.epochs_since_improvement >= patience


@dataclass
class FitResult:
    model: Model                      # best snapshot by validation accuracy
    best_epoch: int
    best_val_accuracy: float
    records: list[EpochRecord] = field(default_factory=list)
    stopped_early: bool = False


class _ImageCache:
    """Raw decoded images kept in memory; manifests at desk scale are small."""

    def __init__(self):
        self._store: dict[str, ImageTensor] = {}

    def get(self, path: str) -> ImageTensor:
        if path not in self._store:
            self._store[path] = read_ppm(path)
        return self._store[path]


def _evaluate_split(model: Model, manifest: DatasetManifest, policy: AugmentPolicy,
                    smoothing: float, cache: _ImageCache) -> tuple[float, float]:
    """Mean loss and accuracy of ``model`` over a manifest with eval transforms."""
    total_loss = 0.0
    correct = 0
    for path, label in manifest.entries:
        prepared = preprocess_eval(cache.get(path), policy)
        logits, _ = forward_with_cache(prepared.values, model)
        total_loss += smoothed_cross_entropy(logits, label, smoothing)
        if int(np.argmax(logits)) == label:
            correct += 1
    n = len(manifest)
    return total_loss / n, correct / n


def fit(
    model: Model,
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest,
    cfg: TrainConfig,
    policy: AugmentPolicy,
) -> FitResult:
    """Train ``model`` in place and return the best checkpoint plus epoch records.

    Raises :class:`NumericsError` naming the offending batch if any batch
    produces a non-finite loss or gradient.
    """
    if len(train_manifest) == 0 or len(val_manifest) == 0:
        raise DatasetError("train and val manifests must be non-empty")

    cache = _ImageCache()
    state = TrainState(
        model=model,
        optimizer=AdamWState.init(model.named_arrays()),
        seed=cfg.seed,
    )
    records: list[EpochRecord] = []
    stopped_early = False

    for epoch in range(cfg.max_epochs):
        state.epoch = epoch
        lr = cfg.learning_rate(epoch)
        shuffle_rng = np.random.default_rng([cfg.seed, STREAM_SHUFFLE, epoch])
        order = shuffle_rng.permutation(len(train_manifest))

        epoch_loss = 0.0
        epoch_correct = 0
        for batch_start in range(0, len(order), cfg.batch_size):
            batch = order[batch_start : batch_start + cfg.batch_size]
            grad_acc = {name: np.zeros_like(arr) for name, arr in model.named_arrays()}
            batch_loss = 0.0
            for sample_index in batch:
                path, label = train_manifest.entries[sample_index]
                aug_rng = np.random.default_rng(
                    [cfg.seed, STREAM_AUGMENT, epoch, int(sample_index)]
                )
                view = augment_train(cache.get(path), policy, aug_rng)
                prepared = normalize(view, policy.normalization_mean, policy.normalization_std)

                logits, fwd_cache = forward_with_cache(prepared.values, model)
                loss = smoothed_cross_entropy(logits, label, cfg.label_smoothing)
                if not np.isfinite(loss):
                    raise NumericsError(
                        f"non-finite loss in epoch {epoch}, "
                        f"batch starting at {batch_start} (sample {path})"
                    )
                batch_loss += loss
                if int(np.argmax(logits)) == label:
                    epoch_correct += 1

                grad_logits = smoothed_cross_entropy_backward(logits, label, cfg.label_smoothing)
                sample_grads = backward(grad_logits, fwd_cache)
                for name, arr in sample_grads.named_arrays():
                    grad_acc[name] += arr

            scale = 1.0 / len(batch)
            for name in grad_acc:
                grad_acc[name] *= scale
            adamw_step(state.optimizer, model.named_arrays(), grad_acc, lr, cfg.weight_decay)
            epoch_loss += batch_loss

        train_loss = epoch_loss / len(order)
        train_accuracy = epoch_correct / len(order)
        val_loss, val_accuracy = _evaluate_split(
            model, val_manifest, policy, cfg.label_smoothing, cache
        )
        records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                train_accuracy=train_accuracy,
                val_loss=val_loss,
                val_accuracy=val_accuracy,
                learning_rate=lr,
            )
        )
        state, should_stop = early_stop_update(state, val_accuracy, cfg.patience)
        if should_stop:
            stopped_early = True
            break

    best_model = state.best_model if state.best_model is not None else model
    best_val = state.best_val_metric if np.isfinite(state.best_val_metric) else 0.0
    return FitResult(
        model=best_model,
        best_epoch=state.best_epoch,
        best_val_accuracy=best_val,
        records=records,
        stopped_early=stopped_early,
    )


EPOCH_LOG_HEADER = ["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy", "learning_rate"]


def save_epoch_log(path: str | Path, records: list[EpochRecord]) -> None:
    """One CSV line per epoch, full float precision, byte-stable."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EPOCH_LOG_HEADER)
        for r in records:
            writer.writerow(
                [r.epoch, repr(r.train_loss), repr(r.train_accuracy),
                 repr(r.val_loss), repr(r.val_accuracy), repr(r.learning_rate)]
            )


def load_epoch_log(path: str | Path) -> list[EpochRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EPOCH_LOG_HEADER:
            raise ValueError(f"{path}: expected header {EPOCH_LOG_HEADER}, got {header}")
        return [
            EpochRecord(int(row[0]), float(row[1]), float(row[2]),
                        float(row[3]), float(row[4]), float(row[5]))
            for row in reader
        ]
