"""Training-time augmentation, deterministic eval preprocessing, normalization.

The default policy: random-area crop resized to 224x224 with scale in
[0.8, 1.0], horizontal flip at p=0.5, rotation up to 20 degrees, and
brightness/contrast/saturation each jittered up to 20%, followed by
ImageNet-statistics normalization.

Randomness comes only from the caller-provided generator, and the draw order
is fixed (crop, flip, rotation, jitter), so one generator state maps to
exactly one output image.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import DimensionError
from .images import (
    RANGE_NORMALIZED,
    RANGE_RAW,
    ImageTensor,
    hflip,
    resize_bilinear,
    rotate_bilinear,
)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# ITU-R BT.601 luma weights, used for contrast/saturation jitter.
_LUMA = np.array([0.299, 0.587, 0.114])

_ASPECT_RANGE = (3.0 / 4.0, 4.0 / 3.0)
_CROP_ATTEMPTS = 10


@dataclass(frozen=True)
class AugmentPolicy:
    crop_size: int = 224
    scale_range: tuple[float, float] = (0.8, 1.0)
    max_rotation: float = 20.0            # degrees
    hflip_prob: float = 0.5
    jitter_limits: tuple[float, float, float] = (0.2, 0.2, 0.2)   # brightness, contrast, saturation
    normalization_mean: tuple[float, float, float] = IMAGENET_MEAN
    normalization_std: tuple[float, float, float] = IMAGENET_STD

    def __post_init__(self):
        object.__setattr__(self, "scale_range", tuple(self.scale_range))
        object.__setattr__(self, "jitter_limits", tuple(self.jitter_limits))
        object.__setattr__(self, "normalization_mean", tuple(self.normalization_mean))
        object.__setattr__(self, "normalization_std", tuple(self.normalization_std))
        low, high = self.scale_range
        if not (0.0 < low <= high <= 1.0):
            raise ValueError(f"scale_range must satisfy 0 < low <= high <= 1, got {self.scale_range}")
        if self.max_rotation < 0:
            raise ValueError("max_rotation must be >= 0")
        if not (0.0 <= self.hflip_prob <= 1.0):
            raise ValueError("hflip_prob must be in [0, 1]")
        if len(self.jitter_limits) != 3 or any(not (0.0 <= j < 1.0) for j in self.jitter_limits):
            raise ValueError("jitter_limits must be three values in [0, 1)")
        if self.crop_size < 1:
            raise ValueError("crop_size must be positive")
        if any(s <= 0 for s in self.normalization_std):
            raise ValueError("normalization_std entries must be positive")


def identity_policy(crop_size: int) -> AugmentPolicy:
    """A policy whose random transforms all collapse to the identity."""
    return AugmentPolicy(
        crop_size=crop_size,
        scale_range=(1.0, 1.0),
        max_rotation=0.0,
        hflip_prob=0.0,
        jitter_limits=(0.0, 0.0, 0.0),
    )


def save_policy(path: str | Path, policy: AugmentPolicy) -> None:
    Path(path).write_text(json.dumps(asdict(policy), indent=2, sort_keys=True) + "\n")


def load_policy(path: str | Path) -> AugmentPolicy:
    raw = json.loads(Path(path).read_text())
    unknown = set(raw) - set(AugmentPolicy.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown policy keys in {path}: {sorted(unknown)}")
    return AugmentPolicy(**raw)


def normalize(image: ImageTensor,
              mean: tuple[float, float, float] = IMAGENET_MEAN,
              std: tuple[float, float, float] = IMAGENET_STD) -> ImageTensor:
    """Per-channel (x - mean) / std; refuses to normalize twice."""
    if image.range_tag == RANGE_NORMALIZED:
        raise ValueError("image is already normalized")
    values = (image.values - np.asarray(mean)) / np.asarray(std)
    return ImageTensor(values=values, range_tag=RANGE_NORMALIZED)


def denormalize(image: ImageTensor,
                mean: tuple[float, float, float] = IMAGENET_MEAN,
                std: tuple[float, float, float] = IMAGENET_STD) -> ImageTensor:
    if image.range_tag != RANGE_NORMALIZED:
        raise ValueError("image is not normalized")
    values = image.values * np.asarray(std) + np.asarray(mean)
    return ImageTensor(values=values, range_tag=RANGE_RAW)


def _sample_crop_box(h: int, w: int, policy: AugmentPolicy, rng: np.random.Generator):
    """Pick (top, left, crop_h, crop_w): random area + aspect with center fallback."""
    area = h * w
    log_lo, log_hi = np.log(_ASPECT_RANGE[0]), np.log(_ASPECT_RANGE[1])
    for _ in range(_CROP_ATTEMPTS):
        target_area = area * rng.uniform(policy.scale_range[0], policy.scale_range[1])
        aspect = np.exp(rng.uniform(log_lo, log_hi))
        crop_w = int(round(np.sqrt(target_area * aspect)))
        crop_h = int(round(np.sqrt(target_area / aspect)))
        if 0 < crop_w <= w and 0 < crop_h <= h:
            top = int(rng.integers(0, h - crop_h + 1))
            left = int(rng.integers(0, w - crop_w + 1))
            return top, left, crop_h, crop_w
    # Fallback: largest centered box with aspect clamped into range.
    in_aspect = w / h
    if in_aspect < _ASPECT_RANGE[0]:
        crop_w = w
        crop_h = int(round(w / _ASPECT_RANGE[0]))
    elif in_aspect > _ASPECT_RANGE[1]:
        crop_h = h
        crop_w = int(round(h * _ASPECT_RANGE[1]))
    else:
        crop_h, crop_w = h, w
    top = (h - crop_h) // 2
    left = (w - crop_w) // 2
    return top, left, crop_h, crop_w


def augment_train(image: ImageTensor, policy: AugmentPolicy, rng: np.random.Generator) -> ImageTensor:
    """One stochastic training view: crop+resize, flip, rotate, color jitter.

    Input must be raw [0, 1]; the output stays raw (normalize separately) and
    is clamped to [0, 1]. Identity-valued draws (factor exactly 1, angle 0)
    skip their op entirely so a fully collapsed policy is bit-exact.
    """
    if image.range_tag != RANGE_RAW:
        raise ValueError("augment_train expects raw [0,1] input")
    h, w = image.height, image.width
    if min(h, w) < 2:
        raise DimensionError(f"image {h}x{w} is too small to crop")

    top, left, crop_h, crop_w = _sample_crop_box(h, w, policy, rng)
    values = image.values[top : top + crop_h, left : left + crop_w, :]
    values = resize_bilinear(values, policy.crop_size, policy.crop_size)

    if rng.uniform() < policy.hflip_prob:
        values = hflip(values)

    angle = rng.uniform(-policy.max_rotation, policy.max_rotation)
    if angle != 0.0:
        values = rotate_bilinear(values, angle, fill=values.mean(axis=(0, 1)))

    b_lim, c_lim, s_lim = policy.jitter_limits
    brightness = rng.uniform(1.0 - b_lim, 1.0 + b_lim)
    contrast = rng.uniform(1.0 - c_lim, 1.0 + c_lim)
    saturation = rng.uniform(1.0 - s_lim, 1.0 + s_lim)
    if brightness != 1.0:
        values = values * brightness
    if contrast != 1.0:
        gray_mean = float((values @ _LUMA).mean())
        values = gray_mean + (values - gray_mean) * contrast
    if saturation != 1.0:
        gray = (values @ _LUMA)[..., None]
        values = gray + (values - gray) * saturation

    return ImageTensor(values=np.clip(values, 0.0, 1.0), range_tag=RANGE_RAW)


def preprocess_eval(image: ImageTensor, policy: AugmentPolicy) -> ImageTensor:
    """Deterministic path: resize straight to crop_size, then normalize."""
    if image.range_tag != RANGE_RAW:
        raise ValueError("preprocess_eval expects raw [0,1] input")
    values = resize_bilinear(image.values, policy.crop_size, policy.crop_size)
    resized = ImageTensor(values=values, range_tag=RANGE_RAW)
    return normalize(resized, policy.normalization_mean, policy.normalization_std)
