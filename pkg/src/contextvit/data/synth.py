"""Synthetic color/texture dataset for desk-scale experiments.

Each class owns a base RGB color drawn from the {0.1, 0.5, 0.9}^3 lattice, so
any two class colors differ by at least 0.4 in some channel; images add a
class-specific stripe texture and small per-image noise, keeping mean colors
linearly separable while still giving the model within-class variation.
Everything is a pure function of (num_classes, per_class, image_size, seed),
and PPM output is deterministic down to the byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .images import ImageTensor, write_ppm
from .manifest import DatasetManifest, load_dataset

_STREAM_SYNTH = 7
_TEXTURE_AMPLITUDE = 0.06
_NOISE_AMPLITUDE = 0.04
_BASE_JITTER = 0.02

# The 27 lattice colors in a fixed interleaved order so early classes are far apart.
_LEVELS = (0.1, 0.5, 0.9)
_COLOR_TABLE = tuple(
    (r, g, b)
    for r, g, b in sorted(
        ((r, g, b) for r in _LEVELS for g in _LEVELS for b in _LEVELS),
        key=lambda c: (round(sum(c), 3), c),
    )
)


def class_color(class_id: int) -> tuple[float, float, float]:
    if not (0 <= class_id < len(_COLOR_TABLE)):
        raise ValueError(f"class id {class_id} outside supported range 0..{len(_COLOR_TABLE) - 1}")
    return _COLOR_TABLE[class_id]


def _texture(class_id: int, size: int, phase: float) -> np.ndarray:
    """Class-keyed stripe pattern in [-1, 1]; orientation/frequency vary by class."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    freq = 2.0 * np.pi * (2 + class_id % 5) / size
    angle = np.pi * (class_id % 7) / 7.0
    coord = np.cos(angle) * xx + np.sin(angle) * yy
    return np.sin(freq * coord + phase)


def make_image(class_id: int, image_size: int, rng: np.random.Generator) -> ImageTensor:
    base = np.asarray(class_color(class_id))
    base = base + rng.uniform(-_BASE_JITTER, _BASE_JITTER, size=3)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    pattern = _texture(class_id, image_size, phase)[..., None]
    noise = rng.uniform(-_NOISE_AMPLITUDE, _NOISE_AMPLITUDE, size=(image_size, image_size, 3))
    values = base + _TEXTURE_AMPLITUDE * pattern + noise
    return ImageTensor(values=np.clip(values, 0.0, 1.0))


def synth_dataset(
    root_dir: str | Path,
    num_classes: int = 12,
    per_class: int = 8,
    image_size: int = 64,
    seed: int = 0,
) -> DatasetManifest:
    """Write ``num_classes * per_class`` PPM files under ``root_dir`` and scan them."""
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if num_classes > len(_COLOR_TABLE):
        raise ValueError(f"at most {len(_COLOR_TABLE)} classes supported")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")

    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)
    for class_id in range(num_classes):
        cdir = root / f"class_{class_id:02d}"
        cdir.mkdir(exist_ok=True)
        for i in range(per_class):
            rng = np.random.default_rng([seed, _STREAM_SYNTH, class_id, i])
            image = make_image(class_id, image_size, rng)
            write_ppm(cdir / f"img_{i:03d}.ppm", image)
    return load_dataset(root)
