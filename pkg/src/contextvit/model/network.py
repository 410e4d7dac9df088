"""Whole-model composition: embed -> stages -> CLS head.

Parameters live in nested dataclasses; ``Model.named_arrays()`` walks them in
a stable order, which the optimizer, checkpointing, and gradient checks all
rely on. Forward and backward are pure functions of (inputs, parameters), so
a model with frozen parameters is safe to call concurrently.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from .blocks import StageParams, stage_backward, stage_forward
from .config import ModelConfig
from .embedding import EmbedParams, TokenSequence, patch_embed, patch_embed_backward
from .functional import layer_norm, layer_norm_backward, softmax, truncated_normal

STREAM_INIT = 3   # rng stream label for parameter initialization


@dataclass
class ClassifierHead:
    weight: np.ndarray   # (C, D)
    bias: np.ndarray     # (C,)

    @classmethod
    def init(cls, dim: int, num_classes: int, rng: np.random.Generator) -> "ClassifierHead":
        return cls(weight=truncated_normal(rng, (num_classes, dim)), bias=np.zeros(num_classes))

    def named_arrays(self, prefix: str = ""):
        yield prefix + "weight", self.weight
        yield prefix + "bias", self.bias


def classify(cls_embedding: np.ndarray, head: ClassifierHead) -> np.ndarray:
    """Softmax class probabilities for a final CLS embedding."""
    if cls_embedding.shape[0] != head.weight.shape[1]:
        raise DimensionError(
            f"CLS dim {cls_embedding.shape[0]} does not match head dim {head.weight.shape[1]}"
        )
    return softmax(head.weight @ cls_embedding + head.bias)


@dataclass
class Model:
    """A config plus every parameter tensor of the network."""

    config: ModelConfig
    embed: EmbedParams
    stages: list[StageParams]
    final_gamma: np.ndarray
    final_beta: np.ndarray
    head: ClassifierHead

    @classmethod
    def init(cls, cfg: ModelConfig, seed: int = 0) -> "Model":
        cfg.validate_stage_grids()
        rng = np.random.default_rng([seed, STREAM_INIT])
        last = cfg.stage_dims[-1]
        return cls(
            config=cfg,
            embed=EmbedParams.init(cfg, rng),
            stages=[StageParams.init(cfg, s, rng) for s in range(cfg.num_stages)],
            final_gamma=np.ones(last),
            final_beta=np.zeros(last),
            head=ClassifierHead.init(last, cfg.num_classes, rng),
        )

    def named_arrays(self, prefix: str = ""):
        yield from self.embed.named_arrays(prefix + "embed.")
        for s, stage in enumerate(self.stages):
            yield from stage.named_arrays(f"{prefix}stages.{s}.")
        yield prefix + "final_gamma", self.final_gamma
        yield prefix + "final_beta", self.final_beta
        yield from self.head.named_arrays(prefix + "head.")

    def param_dict(self) -> dict[str, np.ndarray]:
        return dict(self.named_arrays())

    def copy(self) -> "Model":
        return copy.deepcopy(self)


def forward_with_cache(image: np.ndarray, model: Model):
    """Run the network on one normalized (H, W, 3) image.

    Returns ``(logits, cache)``; ``cache`` also records the token grid after
    each stage for shape inspection.
    """
    seq, embed_cache = patch_embed(image, model.config, model.embed)
    stage_caches = []
    grids = [seq.grid]
    for s, stage in enumerate(model.stages):
        seq, cache = stage_forward(seq, stage, model.config.num_heads[s])
        stage_caches.append(cache)
        grids.append(seq.grid)

    normed, final_cache = layer_norm(seq.tokens, model.final_gamma, model.final_beta)
    cls_embedding = normed[0]
    logits = model.head.weight @ cls_embedding + model.head.bias
    cache = (model, embed_cache, stage_caches, final_cache, seq.tokens.shape, cls_embedding, grids)
    return logits, cache


def forward(image: np.ndarray, model: Model) -> np.ndarray:
    """Class probability vector for one image; deterministic in its inputs."""
    logits, _ = forward_with_cache(image, model)
    return softmax(logits)


def backward(grad_logits: np.ndarray, cache) -> "Model":
    """Backpropagate a logit gradient; returns a Model-shaped gradient container."""
    model, embed_cache, stage_caches, final_cache, token_shape, cls_embedding, _ = cache

    grads = object.__new__(Model)
    grads.config = model.config
    grads.head = ClassifierHead(
        weight=np.outer(grad_logits, cls_embedding),
        bias=grad_logits.copy(),
    )

    dnormed = np.zeros(token_shape)
    dnormed[0] = model.head.weight.T @ grad_logits
    dtokens, grads.final_gamma, grads.final_beta = layer_norm_backward(dnormed, final_cache)

    grads.stages = [None] * len(model.stages)
    for s in range(len(model.stages) - 1, -1, -1):
        dtokens, grads.stages[s] = stage_backward(dtokens, stage_caches[s])

    _, grads.embed = patch_embed_backward(dtokens, embed_cache)
    return grads


def stage_grids(cache) -> list[tuple[int, int]]:
    """Patch grid after embedding and after each stage, from a forward cache."""
    return list(cache[6])


def tokens_after_embed(image: np.ndarray, model: Model) -> TokenSequence:
    seq, _ = patch_embed(image, model.config, model.embed)
    return seq
