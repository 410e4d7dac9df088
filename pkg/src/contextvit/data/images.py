"""Image container, binary PPM raster I/O, and bilinear geometry ops.

Binary PPM (P6, maxval 255) is the one natively supported raster format: it is
uncompressed, trivially deterministic byte-for-byte, and convertible from
anything via ImageMagick/`pnmtopng`-style tools. Values are float64 HWC in
[0, 1] until normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import DimensionError, ImageFormatError

RANGE_RAW = "raw_0_1"
RANGE_NORMALIZED = "normalized"


@dataclass
class ImageTensor:
    """(H, W, 3) float image plus a tag saying whether it is still in [0, 1]."""

    values: np.ndarray
    range_tag: str = RANGE_RAW

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[2] != 3:
            raise DimensionError(f"expected (H, W, 3) values, got {self.values.shape}")
        if self.range_tag not in (RANGE_RAW, RANGE_NORMALIZED):
            raise ValueError(f"unknown range tag {self.range_tag!r}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def with_values(self, values: np.ndarray, range_tag: str | None = None) -> "ImageTensor":
        return replace(self, values=values, range_tag=range_tag or self.range_tag)


def read_ppm(path: str | Path) -> ImageTensor:
    """Decode a binary PPM (P6) file into a raw [0, 1] ImageTensor."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ImageFormatError(f"{path}: not a binary PPM (P6) file")

    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed between them.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    pos += 1   # single whitespace byte after maxval

    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad PPM header fields {fields}") from exc
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 supported, got {maxval}")

    expected = width * height * 3
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ImageFormatError(f"{path}: raster has {len(raster)} bytes, expected {expected}")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return ImageTensor(values=arr.astype(np.float64) / 255.0, range_tag=RANGE_RAW)


def write_ppm(path: str | Path, image: ImageTensor) -> None:
    """Encode a raw [0, 1] ImageTensor as binary PPM; output bytes are deterministic."""
    if image.range_tag != RANGE_RAW:
        raise ValueError("write_ppm expects raw [0,1] values, not normalized ones")
    arr = np.clip(np.rint(image.values * 255.0), 0, 255).astype(np.uint8)
    header = f"P6\n{image.width} {image.height}\n255\n".encode()
    Path(path).write_bytes(header + arr.tobytes())


def hflip(values: np.ndarray) -> np.ndarray:
    """Exact horizontal mirror; applying it twice restores the input bitwise."""
    return values[:, ::-1, :].copy()


def _bilinear_gather(values: np.ndarray, ys: np.ndarray, xs: np.ndarray, fill: np.ndarray) -> np.ndarray:
    """Sample (H, W, C) ``values`` at float coords; out-of-bounds picks ``fill``."""
    h, w, c = values.shape
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    fy = ys - y0
    fx = xs - x0

    out = np.zeros(ys.shape + (c,))
    for dy, dx, wgt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy = y0 + dy
        xx = x0 + dx
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        sample = np.where(
            inside[..., None],
            values[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)],
            fill,
        )
        out += wgt[..., None] * sample
    return out


def resize_bilinear(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-centered bilinear resize with edge clamping."""
    h, w, _ = values.shape
    if (out_h, out_w) == (h, w):
        return values.copy()
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    grid_y, grid_x = np.meshgrid(np.clip(ys, 0, h - 1), np.clip(xs, 0, w - 1), indexing="ij")
    return _bilinear_gather(values, grid_y, grid_x, fill=np.zeros(values.shape[2]))


def rotate_bilinear(values: np.ndarray, degrees: float, fill: np.ndarray) -> np.ndarray:
    """Rotate about the image center; uncovered regions take ``fill`` per channel."""
    if degrees == 0.0:
        return values.copy()
    h, w, _ = values.shape
    theta = np.deg2rad(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0

    out_y, out_x = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    rel_y = out_y - cy
    rel_x = out_x - cx
    # inverse map: source coordinates that land on each output pixel
    src_y = cos_t * rel_y + sin_t * rel_x + cy
    src_x = -sin_t * rel_y + cos_t * rel_x + cx
    return _bilinear_gather(values, src_y, src_x, fill=fill)
