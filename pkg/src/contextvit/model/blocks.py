"""Transformer blocks, hierarchical stages, and downsampling.

Block layout is the standard pre-norm residual pair:

    x = x + attention(norm1(x))
    x = x + mlp(norm2(x))

Downsampling between stages merges each 2x2 patch-token neighborhood into one
token via a learned linear map (a 2x2 stride-2 convolution over the token
grid) while the CLS token, having no spatial position, is carried across with
its own linear projection to the new width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from .attention import AttentionParams, gc_attention, gc_attention_backward
from .config import ModelConfig
from .embedding import TokenSequence
from .functional import (
    fan_in_normal,
    gelu,
    gelu_backward,
    layer_norm,
    layer_norm_backward,
    linear,
    linear_backward,
)


@dataclass
class BlockParams:
    norm1_gamma: np.ndarray
    norm1_beta: np.ndarray
    attn: AttentionParams
    norm2_gamma: np.ndarray
    norm2_beta: np.ndarray
    mlp_w1: np.ndarray   # (D, ratio*D)
    mlp_b1: np.ndarray
    mlp_w2: np.ndarray   # (ratio*D, D)
    mlp_b2: np.ndarray

    @classmethod
    def init(cls, dim: int, mlp_ratio: int, rng: np.random.Generator) -> "BlockParams":
        hidden = dim * mlp_ratio
        return cls(
            norm1_gamma=np.ones(dim),
            norm1_beta=np.zeros(dim),
            attn=AttentionParams.init(dim, rng),
            norm2_gamma=np.ones(dim),
            norm2_beta=np.zeros(dim),
            mlp_w1=fan_in_normal(rng, (dim, hidden), dim),
            mlp_b1=np.zeros(hidden),
            mlp_w2=fan_in_normal(rng, (hidden, dim), hidden),
            mlp_b2=np.zeros(dim),
        )

    def named_arrays(self, prefix: str = ""):
        yield prefix + "norm1_gamma", self.norm1_gamma
        yield prefix + "norm1_beta", self.norm1_beta
        yield from self.attn.named_arrays(prefix + "attn.")
        yield prefix + "norm2_gamma", self.norm2_gamma
        yield prefix + "norm2_beta", self.norm2_beta
        yield prefix + "mlp_w1", self.mlp_w1
        yield prefix + "mlp_b1", self.mlp_b1
        yield prefix + "mlp_w2", self.mlp_w2
        yield prefix + "mlp_b2", self.mlp_b2


def block_forward(tokens: np.ndarray, params: BlockParams, num_heads: int):
    normed1, ln1_cache = layer_norm(tokens, params.norm1_gamma, params.norm1_beta)
    attn_out, attn_cache = gc_attention(normed1, params.attn, num_heads)
    mid = tokens + attn_out

    normed2, ln2_cache = layer_norm(mid, params.norm2_gamma, params.norm2_beta)
    pre_act = linear(normed2, params.mlp_w1, params.mlp_b1)
    hidden = gelu(pre_act)
    mlp_out = linear(hidden, params.mlp_w2, params.mlp_b2)
    out = mid + mlp_out

    cache = (params, ln1_cache, attn_cache, ln2_cache, normed2, pre_act, hidden)
    return out, cache


def block_backward(grad_out: np.ndarray, cache):
    params, ln1_cache, attn_cache, ln2_cache, normed2, pre_act, hidden = cache
    grads = object.__new__(BlockParams)

    dhidden, grads.mlp_w2, grads.mlp_b2 = linear_backward(hidden, params.mlp_w2, grad_out)
    dpre_act = gelu_backward(pre_act, dhidden)
    dnormed2, grads.mlp_w1, grads.mlp_b1 = linear_backward(normed2, params.mlp_w1, dpre_act)
    dmid_from_mlp, grads.norm2_gamma, grads.norm2_beta = layer_norm_backward(dnormed2, ln2_cache)
    dmid = grad_out + dmid_from_mlp    # residual around the MLP

    dnormed1, grads.attn = gc_attention_backward(dmid, attn_cache)
    dtokens_ln, grads.norm1_gamma, grads.norm1_beta = layer_norm_backward(dnormed1, ln1_cache)
    dtokens = dmid + dtokens_ln        # residual around attention
    return dtokens, grads


@dataclass
class DownsampleParams:
    """2x2 patch-merge weights plus the CLS width projection."""

    merge_weight: np.ndarray   # (4*C_in, C_out)
    merge_bias: np.ndarray
    cls_weight: np.ndarray     # (C_in, C_out)
    cls_bias: np.ndarray

    @classmethod
    def init(cls, dim_in: int, dim_out: int, rng: np.random.Generator) -> "DownsampleParams":
        return cls(
            merge_weight=fan_in_normal(rng, (4 * dim_in, dim_out), 4 * dim_in),
            merge_bias=np.zeros(dim_out),
            cls_weight=fan_in_normal(rng, (dim_in, dim_out), dim_in),
            cls_bias=np.zeros(dim_out),
        )

    def named_arrays(self, prefix: str = ""):
        yield prefix + "merge_weight", self.merge_weight
        yield prefix + "merge_bias", self.merge_bias
        yield prefix + "cls_weight", self.cls_weight
        yield prefix + "cls_bias", self.cls_bias


def downsample(seq: TokenSequence, params: DownsampleParams):
    gh, gw = seq.grid
    if gh % 2 != 0 or gw % 2 != 0:
        raise DimensionError(f"cannot halve an odd patch grid {gh}x{gw}")
    dim = seq.dim
    merged_in = (
        seq.patches.reshape(gh // 2, 2, gw // 2, 2, dim)
        .transpose(0, 2, 1, 3, 4)
        .reshape((gh // 2) * (gw // 2), 4 * dim)
    )
    new_patches = linear(merged_in, params.merge_weight, params.merge_bias)
    new_cls = linear(seq.cls, params.cls_weight, params.cls_bias)

    tokens = np.empty((new_patches.shape[0] + 1, new_patches.shape[1]))
    tokens[0] = new_cls
    tokens[1:] = new_patches
    out = TokenSequence(tokens=tokens, grid=(gh // 2, gw // 2))
    cache = (params, seq.cls, merged_in, seq.grid, dim)
    return out, cache


def downsample_backward(grad_tokens: np.ndarray, cache):
    params, cls_in, merged_in, grid, dim = cache
    gh, gw = grid
    grads = object.__new__(DownsampleParams)

    dcls_in, grads.cls_weight, grads.cls_bias = linear_backward(
        cls_in[None, :], params.cls_weight, grad_tokens[0][None, :]
    )
    dmerged, grads.merge_weight, grads.merge_bias = linear_backward(
        merged_in, params.merge_weight, grad_tokens[1:]
    )
    dpatches = (
        dmerged.reshape(gh // 2, gw // 2, 2, 2, dim)
        .transpose(0, 2, 1, 3, 4)
        .reshape(gh * gw, dim)
    )
    dtokens = np.empty((gh * gw + 1, dim))
    dtokens[0] = dcls_in[0]
    dtokens[1:] = dpatches
    return dtokens, grads


@dataclass
class StageParams:
    blocks: list[BlockParams]
    down: DownsampleParams | None   # None on the final stage

    @classmethod
    def init(cls, cfg: ModelConfig, stage: int, rng: np.random.Generator) -> "StageParams":
        dim = cfg.stage_dims[stage]
        blocks = [BlockParams.init(dim, cfg.mlp_ratio, rng) for _ in range(cfg.stage_depths[stage])]
        down = None
        if stage < cfg.num_stages - 1:
            down = DownsampleParams.init(dim, cfg.stage_dims[stage + 1], rng)
        return cls(blocks=blocks, down=down)

    def named_arrays(self, prefix: str = ""):
        for i, block in enumerate(self.blocks):
            yield from block.named_arrays(f"{prefix}blocks.{i}.")
        if self.down is not None:
            yield from self.down.named_arrays(prefix + "down.")


def stage_forward(seq: TokenSequence, params: StageParams, num_heads: int):
    """Run one stage: its attention blocks, then the downsample if present."""
    block_caches = []
    tokens = seq.tokens
    for block in params.blocks:
        tokens, cache = block_forward(tokens, block, num_heads)
        block_caches.append(cache)
    seq = TokenSequence(tokens=tokens, grid=seq.grid)

    down_cache = None
    if params.down is not None:
        seq, down_cache = downsample(seq, params.down)
    return seq, (block_caches, down_cache)


def stage_backward(grad_tokens: np.ndarray, stage_cache):
    block_caches, down_cache = stage_cache
    grads = object.__new__(StageParams)
    if down_cache is not None:
        grad_tokens, grads.down = downsample_backward(grad_tokens, down_cache)
    else:
        grads.down = None

    grads.blocks = []
    for cache in reversed(block_caches):
        grad_tokens, bgrads = block_backward(grad_tokens, cache)
        grads.blocks.append(bgrads)
    grads.blocks.reverse()
    return grad_tokens, grads
