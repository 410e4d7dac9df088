from .augment import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    AugmentPolicy,
    augment_train,
    denormalize,
    identity_policy,
    load_policy,
    normalize,
    preprocess_eval,
    save_policy,
)
from .images import ImageTensor, hflip, read_ppm, resize_bilinear, rotate_bilinear, write_ppm
from .manifest import (
    STREAM_AUGMENT,
    STREAM_SHUFFLE,
    STREAM_SPLIT,
    DatasetManifest,
    SplitSpec,
    load_dataset,
    load_manifest,
    save_manifest,
    stratified_split,
)
from .synth import class_color, make_image, synth_dataset

__all__ = [
    "AugmentPolicy",
    "DatasetManifest",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "ImageTensor",
    "STREAM_AUGMENT",
    "STREAM_SHUFFLE",
    "STREAM_SPLIT",
    "SplitSpec",
    "augment_train",
    "class_color",
    "denormalize",
    "hflip",
    "identity_policy",
    "load_dataset",
    "load_manifest",
    "load_policy",
    "make_image",
    "normalize",
    "preprocess_eval",
    "read_ppm",
    "resize_bilinear",
    "rotate_bilinear",
    "save_manifest",
    "save_policy",
    "synth_dataset",
    "stratified_split",
    "write_ppm",
]
