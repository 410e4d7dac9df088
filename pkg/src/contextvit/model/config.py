"""Architecture hyperparameters and shape bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import DimensionError


@dataclass(frozen=True)
class ModelConfig:
    """Full architectural description of a global-context ViT classifier.

    ``stage_dims[0]`` doubles as the patch-embedding dimension. ``num_heads``
    is per stage; passing a single int applies it to every stage.
    """

    input_size: tuple[int, int] = (64, 64)      # (H, W) pixels
    patch_size: int = 8
    stage_depths: tuple[int, ...] = (2, 2)      # attention blocks per stage
    stage_dims: tuple[int, ...] = (32, 64)      # token dim per stage
    num_heads: tuple[int, ...] = (2, 2)
    num_classes: int = 12
    stem_channels: int = 8                      # width of the conv stem
    mlp_ratio: int = 4

    def __post_init__(self):
        if isinstance(self.input_size, int):
            object.__setattr__(self, "input_size", (self.input_size, self.input_size))
        object.__setattr__(self, "input_size", tuple(self.input_size))
        object.__setattr__(self, "stage_depths", tuple(self.stage_depths))
        object.__setattr__(self, "stage_dims", tuple(self.stage_dims))
        if isinstance(self.num_heads, int):
            object.__setattr__(self, "num_heads", (self.num_heads,) * len(self.stage_dims))
        object.__setattr__(self, "num_heads", tuple(self.num_heads))
        self.validate()

    def validate(self):
        h, w = self.input_size
        p = self.patch_size
        if p <= 0 or h % p != 0 or w % p != 0:
            raise DimensionError(
                f"input size {h}x{w} is not divisible by patch size {p}"
            )
        if len(self.stage_depths) != len(self.stage_dims):
            raise DimensionError("stage_depths and stage_dims must have equal length")
        if len(self.num_heads) != len(self.stage_dims):
            raise DimensionError("num_heads must give one head count per stage")
        if any(d <= 0 for d in self.stage_dims) or any(d < 0 for d in self.stage_depths):
            raise DimensionError("stage dims must be positive, depths non-negative")
        if any(b < a for a, b in zip(self.stage_dims, self.stage_dims[1:])):
            raise DimensionError(f"stage_dims must be non-decreasing, got {self.stage_dims}")
        for dim, heads in zip(self.stage_dims, self.num_heads):
            if heads <= 0 or dim % heads != 0:
                raise DimensionError(f"stage dim {dim} not divisible by {heads} heads")
        if self.num_classes < 2:
            raise DimensionError("need at least 2 classes")
        if self.stem_channels <= 0 or self.mlp_ratio <= 0:
            raise DimensionError("stem_channels and mlp_ratio must be positive")

    @property
    def embed_dim(self) -> int:
        return self.stage_dims[0]

    @property
    def num_stages(self) -> int:
        return len(self.stage_dims)

    def head_dim(self, stage: int) -> int:
        return self.stage_dims[stage] // self.num_heads[stage]

    @property
    def base_grid(self) -> tuple[int, int]:
        """Patch grid (rows, cols) right after embedding."""
        h, w = self.input_size
        return h // self.patch_size, w // self.patch_size

    @property
    def num_patches(self) -> int:
        gh, gw = self.base_grid
        return gh * gw

    def grid_at_stage(self, stage: int) -> tuple[int, int]:
        """Closed-form patch grid at the *input* of ``stage`` (halved per downsample)."""
        gh, gw = self.base_grid
        return gh >> stage, gw >> stage

    def validate_stage_grids(self):
        """Every downsample boundary needs an even grid; checked eagerly here."""
        gh, gw = self.base_grid
        for s in range(self.num_stages - 1):
            if gh % 2 != 0 or gw % 2 != 0:
                raise DimensionError(
                    f"grid {gh}x{gw} entering downsample after stage {s} is odd"
                )
            gh, gw = gh // 2, gw // 2


def desk_tiny_config(num_classes: int = 12) -> ModelConfig:
    """Default small configuration, sized so CPU training and tests stay fast."""
    return ModelConfig(
        input_size=(64, 64),
        patch_size=8,
        stage_depths=(2, 2),
        stage_dims=(32, 64),
        num_heads=(2, 2),
        num_classes=num_classes,
    )


def paper_shaped_config(num_classes: int = 12) -> ModelConfig:
    """224x224 input with a 16-pixel patch: 196 patch tokens plus CLS."""
    return ModelConfig(
        input_size=(224, 224),
        patch_size=16,
        stage_depths=(1, 1),
        stage_dims=(16, 32),
        num_heads=(1, 2),
        num_classes=num_classes,
        stem_channels=4,
    )


def four_stage_config(num_classes: int = 12) -> ModelConfig:
    """224x224 input, 4-pixel patch, four stages: grid halves 56 -> 28 -> 14 -> 7."""
    return ModelConfig(
        input_size=(224, 224),
        patch_size=4,
        stage_depths=(1, 1, 1, 1),
        stage_dims=(8, 16, 32, 64),
        num_heads=(1, 1, 1, 1),
        num_classes=num_classes,
        stem_channels=4,
    )
