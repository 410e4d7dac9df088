"""Global-context attention.

A learned softmax pooling over the patch tokens produces a single context
vector which is added (after projection) to every key and value row before
scaled dot-product attention. Token row 0 is the CLS token: it attends and is
attended to like any other row but is excluded from the context pooling.

Shapes use M = N + 1 rows (CLS + N patch tokens) and model dim D.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..errors import DimensionError, NumericsError
from .functional import fan_in_normal, softmax, softmax_backward


@dataclass
class AttentionParams:
    """Projection weights of one attention layer.

    ``w_query/w_key/w_value``: (D, D) token projections.
    ``w_agg``: (D,) scoring vector for the context pooling weights.
    ``w_ctx_key/w_ctx_value``: (D, D) maps from the pooled context vector into
    the key/value offsets.
    """

    w_query: np.ndarray
    w_key: np.ndarray
    w_value: np.ndarray
    w_agg: np.ndarray
    w_ctx_key: np.ndarray
    w_ctx_value: np.ndarray

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator) -> "AttentionParams":
        return cls(
            w_query=fan_in_normal(rng, (dim, dim), dim),
            w_key=fan_in_normal(rng, (dim, dim), dim),
            w_value=fan_in_normal(rng, (dim, dim), dim),
            w_agg=fan_in_normal(rng, (dim,), dim),
            w_ctx_key=fan_in_normal(rng, (dim, dim), dim),
            w_ctx_value=fan_in_normal(rng, (dim, dim), dim),
        )

    @classmethod
    def zeros(cls, dim: int) -> "AttentionParams":
        return cls(*(np.zeros(s) for s in [(dim, dim)] * 3 + [(dim,)] + [(dim, dim)] * 2))

    def zeros_like(self) -> "AttentionParams":
        return AttentionParams(**{f.name: np.zeros_like(getattr(self, f.name)) for f in fields(self)})

    def named_arrays(self, prefix: str = ""):
        for f in fields(self):
            yield prefix + f.name, getattr(self, f.name)


def global_context(tokens: np.ndarray, w_agg: np.ndarray, include_cls_row: bool = True):
    """Softmax-pooled summary of the patch tokens.

    ``tokens`` is (M, D) with the CLS row first when ``include_cls_row``; the
    pooling runs over the remaining N patch rows. Returns ``(g, alpha)`` where
    ``alpha`` is a probability vector of length N and ``g = alpha @ patches``.
    """
    patches = tokens[1:] if include_cls_row else tokens
    if patches.shape[0] < 1:
        raise DimensionError("global context needs at least one patch token")
    if patches.shape[1] != w_agg.shape[0]:
        raise DimensionError(
            f"token dim {patches.shape[1]} does not match pooling vector dim {w_agg.shape[0]}"
        )
    scores = patches @ w_agg
    alpha = softmax(scores)
    g = alpha @ patches
    return g, alpha


def _global_context_backward(patches, w_agg, alpha, dg, dalpha_extra=None):
    """Backward of :func:`global_context` onto (patches, w_agg)."""
    dalpha = patches @ dg
    if dalpha_extra is not None:
        dalpha = dalpha + dalpha_extra
    dscores = softmax_backward(alpha, dalpha)
    dw_agg = patches.T @ dscores
    dpatches = np.outer(alpha, dg) + np.outer(dscores, w_agg)
    return dpatches, dw_agg


def gc_attention(tokens: np.ndarray, params: AttentionParams, num_heads: int = 1):
    """Forward pass; returns ``(out, cache)`` with ``out`` shaped like ``tokens``.

    Queries/keys/values are full-width projections; the pooled context vector
    is projected and broadcast-added to K and V; heads then split the width
    for the softmax(Q K^T / sqrt(d_k)) V step and are concatenated back.
    """
    m, dim = tokens.shape
    if dim != params.w_query.shape[0]:
        raise DimensionError(f"token dim {dim} does not match params dim {params.w_query.shape[0]}")
    if num_heads <= 0 or dim % num_heads != 0:
        raise DimensionError(f"dim {dim} not divisible by {num_heads} heads")
    head_dim = dim // num_heads

    g, alpha = global_context(tokens, params.w_agg)
    q = tokens @ params.w_query
    k = tokens @ params.w_key
    v = tokens @ params.w_value
    ctx_k = g @ params.w_ctx_key
    ctx_v = g @ params.w_ctx_value
    k_fused = k + ctx_k            # broadcast: same offset added to every row
    v_fused = v + ctx_v

    scale = 1.0 / np.sqrt(head_dim)
    out = np.empty_like(tokens)
    attn_heads = []
    for h in range(num_heads):
        sl = slice(h * head_dim, (h + 1) * head_dim)
        attn = softmax(scale * (q[:, sl] @ k_fused[:, sl].T), axis=-1)
        out[:, sl] = attn @ v_fused[:, sl]
        attn_heads.append(attn)

    if not np.isfinite(out).all():
        raise NumericsError("attention produced non-finite values")
    cache = (tokens, params, num_heads, g, alpha, q, k_fused, v_fused, attn_heads)
    return out, cache


def attention_rows(cache) -> list[np.ndarray]:
    """Per-head attention weight matrices from a forward cache (for inspection)."""
    return [a.copy() for a in cache[8]]


def gc_attention_backward(grad_out: np.ndarray, cache):
    """Backward pass; returns ``(dtokens, dparams)``.

    ``dparams`` is an :class:`AttentionParams` holding gradients for every
    weight in the layer.
    """
    tokens, params, num_heads, g, alpha, q, k_fused, v_fused, attn_heads = cache
    m, dim = tokens.shape
    head_dim = dim // num_heads
    scale = 1.0 / np.sqrt(head_dim)

    dq = np.empty_like(q)
    dk_fused = np.empty_like(k_fused)
    dv_fused = np.empty_like(v_fused)
    for h in range(num_heads):
        sl = slice(h * head_dim, (h + 1) * head_dim)
        attn = attn_heads[h]
        go = grad_out[:, sl]
        dattn = go @ v_fused[:, sl].T
        dv_fused[:, sl] = attn.T @ go
        dscores = softmax_backward(attn, dattn) * scale
        dq[:, sl] = dscores @ k_fused[:, sl]
        dk_fused[:, sl] = dscores.T @ q[:, sl]

    # K/V fusion: the context offset is broadcast over rows, so its gradient
    # is the column sum; the raw K/V gradients pass through unchanged.
    dctx_k = dk_fused.sum(axis=0)
    dctx_v = dv_fused.sum(axis=0)
    dw_ctx_key = np.outer(g, dctx_k)
    dw_ctx_value = np.outer(g, dctx_v)
    dg = params.w_ctx_key @ dctx_k + params.w_ctx_value @ dctx_v

    dw_query = tokens.T @ dq
    dw_key = tokens.T @ dk_fused
    dw_value = tokens.T @ dv_fused
    dtokens = dq @ params.w_query.T + dk_fused @ params.w_key.T + dv_fused @ params.w_value.T

    dpatches, dw_agg = _global_context_backward(tokens[1:], params.w_agg, alpha, dg)
    dtokens[1:] += dpatches

    dparams = AttentionParams(
        w_query=dw_query,
        w_key=dw_key,
        w_value=dw_value,
        w_agg=dw_agg,
        w_ctx_key=dw_ctx_key,
        w_ctx_value=dw_ctx_value,
    )
    return dtokens, dparams
