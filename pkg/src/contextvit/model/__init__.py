from .attention import AttentionParams, attention_rows, gc_attention, gc_attention_backward, global_context
from .blocks import BlockParams, DownsampleParams, StageParams, downsample, stage_forward
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, desk_tiny_config, four_stage_config, paper_shaped_config
from .embedding import EmbedParams, TokenSequence, patch_embed
from .functional import gelu, layer_norm, softmax
from .network import ClassifierHead, Model, backward, classify, forward, forward_with_cache, stage_grids

__all__ = [
    "AttentionParams",
    "BlockParams",
    "ClassifierHead",
    "DownsampleParams",
    "EmbedParams",
    "Model",
    "ModelConfig",
    "StageParams",
    "TokenSequence",
    "attention_rows",
    "backward",
    "classify",
    "desk_tiny_config",
    "downsample",
    "forward",
    "forward_with_cache",
    "four_stage_config",
    "gc_attention",
    "gc_attention_backward",
    "gelu",
    "global_context",
    "layer_norm",
    "load_checkpoint",
    "paper_shaped_config",
    "patch_embed",
    "save_checkpoint",
    "softmax",
    "stage_forward",
    "stage_grids",
]
