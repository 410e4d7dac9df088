"""Convolutional stem and patch embedding.

The stem is two 3x3 stride-1 same-padding convolutions with GELU, applied to
the raw (H, W, 3) image before patchification; it preserves spatial size, so
divisibility by the patch size is unaffected. Patches of the stem output are
flattened, linearly projected, offset by a learned positional table, and a
learned CLS token is prepended at row 0.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import DimensionError
from .config import ModelConfig
from .functional import fan_in_normal, gelu, gelu_backward


@dataclass
class TokenSequence:
    """(N+1, D) token matrix with the CLS row first, plus its patch grid."""

    tokens: np.ndarray
    grid: tuple[int, int]

    @property
    def num_patches(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]

    @property
    def cls(self) -> np.ndarray:
        return self.tokens[0]

    @property
    def patches(self) -> np.ndarray:
        return self.tokens[1:]


def conv3x3(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray):
    """3x3 stride-1 zero-padded convolution on an (H, W, Cin) map.

    ``kernel`` is (3, 3, Cin, Cout). Returns (out, padded input) where the
    padded input is reused by the backward pass.
    """
    h, w, cin = x.shape
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    out = np.tile(bias, (h, w, 1))
    for dy in range(3):
        for dx in range(3):
            out += xp[dy : dy + h, dx : dx + w, :] @ kernel[dy, dx]
    return out, xp


def conv3x3_backward(grad_out: np.ndarray, xp: np.ndarray, kernel: np.ndarray):
    h, w, _ = grad_out.shape
    dkernel = np.empty_like(kernel)
    dxp = np.zeros_like(xp)
    for dy in range(3):
        for dx in range(3):
            window = xp[dy : dy + h, dx : dx + w, :]
            dkernel[dy, dx] = np.tensordot(window, grad_out, axes=([0, 1], [0, 1]))
            dxp[dy : dy + h, dx : dx + w, :] += grad_out @ kernel[dy, dx].T
    dbias = grad_out.sum(axis=(0, 1))
    dx = dxp[1:-1, 1:-1, :]
    return dx, dkernel, dbias


@dataclass
class EmbedParams:
    """Stem convolutions, patch projection, positional table, CLS token."""

    stem1_kernel: np.ndarray   # (3, 3, 3, stem_channels)
    stem1_bias: np.ndarray
    stem2_kernel: np.ndarray   # (3, 3, stem_channels, stem_channels)
    stem2_bias: np.ndarray
    proj: np.ndarray           # (D, P*P*stem_channels)
    pos: np.ndarray            # (N, D)
    cls_token: np.ndarray      # (D,)

    @classmethod
    def init(cls, cfg: ModelConfig, rng: np.random.Generator) -> "EmbedParams":
        c = cfg.stem_channels
        d = cfg.embed_dim
        patch_len = cfg.patch_size * cfg.patch_size * c
        return cls(
            stem1_kernel=fan_in_normal(rng, (3, 3, 3, c), 9 * 3),
            stem1_bias=np.zeros(c),
            stem2_kernel=fan_in_normal(rng, (3, 3, c, c), 9 * c),
            stem2_bias=np.zeros(c),
            proj=fan_in_normal(rng, (d, patch_len), patch_len),
            pos=rng.standard_normal((cfg.num_patches, d)) * 0.02,
            cls_token=rng.standard_normal(d) * 0.02,
        )

    def named_arrays(self, prefix: str = ""):
        for f in fields(self):
            yield prefix + f.name, getattr(self, f.name)

    def zeros_like(self) -> "EmbedParams":
        return EmbedParams(**{f.name: np.zeros_like(getattr(self, f.name)) for f in fields(self)})


def _patchify(feat: np.ndarray, patch: int) -> np.ndarray:
    """(H, W, C) -> (N, patch*patch*C) rows in row-major patch order."""
    h, w, c = feat.shape
    gh, gw = h // patch, w // patch
    blocks = feat.reshape(gh, patch, gw, patch, c).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(gh * gw, patch * patch * c)


def _unpatchify(rows: np.ndarray, grid: tuple[int, int], patch: int, channels: int) -> np.ndarray:
    gh, gw = grid
    blocks = rows.reshape(gh, gw, patch, patch, channels).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(gh * patch, gw * patch, channels)


def patch_embed(image: np.ndarray, cfg: ModelConfig, params: EmbedParams):
    """Embed an (H, W, 3) normalized image; returns (TokenSequence, cache).

    Raises :class:`DimensionError` if the image shape disagrees with the
    config or is not divisible by the patch size.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"expected an (H, W, 3) image, got {image.shape}")
    h, w, _ = image.shape
    if (h, w) != tuple(cfg.input_size):
        raise DimensionError(f"image {h}x{w} does not match configured input {cfg.input_size}")
    if h % cfg.patch_size != 0 or w % cfg.patch_size != 0:
        raise DimensionError(f"image {h}x{w} not divisible by patch size {cfg.patch_size}")

    pre1, xp1 = conv3x3(image, params.stem1_kernel, params.stem1_bias)
    act1 = gelu(pre1)
    pre2, xp2 = conv3x3(act1, params.stem2_kernel, params.stem2_bias)
    feat = gelu(pre2)

    patch_rows = _patchify(feat, cfg.patch_size)
    embedded = patch_rows @ params.proj.T + params.pos

    tokens = np.empty((embedded.shape[0] + 1, cfg.embed_dim))
    tokens[0] = params.cls_token
    tokens[1:] = embedded
    seq = TokenSequence(tokens=tokens, grid=cfg.base_grid)
    cache = (cfg, params, xp1, pre1, xp2, pre2, patch_rows)
    return seq, cache


def patch_embed_backward(grad_tokens: np.ndarray, cache):
    """Backward of :func:`patch_embed`; returns (dimage, dparams)."""
    cfg, params, xp1, pre1, xp2, pre2, patch_rows = cache
    dcls = grad_tokens[0].copy()
    dembedded = grad_tokens[1:]

    dpos = dembedded.copy()
    dproj = dembedded.T @ patch_rows
    dpatch_rows = dembedded @ params.proj

    dfeat = _unpatchify(dpatch_rows, cfg.base_grid, cfg.patch_size, cfg.stem_channels)
    dpre2 = gelu_backward(pre2, dfeat)
    dact1, dk2, db2 = conv3x3_backward(dpre2, xp2, params.stem2_kernel)
    dpre1 = gelu_backward(pre1, dact1)
    dimage, dk1, db1 = conv3x3_backward(dpre1, xp1, params.stem1_kernel)

    dparams = EmbedParams(
        stem1_kernel=dk1,
        stem1_bias=db1,
        stem2_kernel=dk2,
        stem2_bias=db2,
        proj=dproj,
        pos=dpos,
        cls_token=dcls,
    )
    return dimage, dparams
