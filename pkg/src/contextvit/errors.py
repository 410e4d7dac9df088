"""Exception types shared across the package."""


class ContextVitError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(ContextVitError, ValueError):
    """Shapes or sizes are inconsistent (e.g. image size not divisible by patch size)."""


class DatasetError(ContextVitError, ValueError):
    """Dataset layout or content problems (missing classes, unreadable files, ...)."""


class ImageFormatError(ContextVitError, ValueError):
    """Raster file could not be decoded."""


class NumericsError(ContextVitError, ArithmeticError):
    """Non-finite values encountered where finite ones are required."""


class CheckpointError(ContextVitError, ValueError):
    """Checkpoint file is malformed or incompatible with the requested model."""
