"""Checkpoint container: one .npz holding config JSON + every parameter tensor.

Round trips are bit-exact: arrays are stored as float64 without any casting,
and the config/metadata travel as UTF-8 JSON payloads inside the archive.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .config import ModelConfig
from .network import Model

FORMAT_VERSION = 1
_PARAM_PREFIX = "param/"


def save_checkpoint(path: str | Path, model: Model, metadata: dict | None = None) -> None:
    """Write ``model`` (and optional JSON-serializable ``metadata``) to ``path``."""
    payload = {
        "__version__": np.array(FORMAT_VERSION),
        "__config__": np.frombuffer(
            json.dumps(dataclasses.asdict(model.config)).encode(), dtype=np.uint8
        ),
        "__metadata__": np.frombuffer(
            json.dumps(metadata or {}, sort_keys=True).encode(), dtype=np.uint8
        ),
    }
    for name, arr in model.named_arrays():
        payload[_PARAM_PREFIX + name] = arr
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path: str | Path) -> tuple[Model, dict]:
    """Read a checkpoint; returns ``(model, metadata)``.

    Raises :class:`CheckpointError` on version/field/shape mismatches.
    """
    try:
        with np.load(path, allow_pickle=False) as archive:
            data = {k: archive[k] for k in archive.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    version = int(data.get("__version__", -1))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} in {path}")

    cfg_dict = json.loads(bytes(data["__config__"]).decode())
    metadata = json.loads(bytes(data["__metadata__"]).decode())
    cfg = ModelConfig(**cfg_dict)

    model = Model.init(cfg, seed=0)
    stored = {k[len(_PARAM_PREFIX):]: v for k, v in data.items() if k.startswith(_PARAM_PREFIX)}
    expected = dict(model.named_arrays())
    missing = sorted(set(expected) - set(stored))
    extra = sorted(set(stored) - set(expected))
    if missing or extra:
        raise CheckpointError(
            f"checkpoint {path} does not match config (missing={missing}, extra={extra})"
        )
    for name, arr in model.named_arrays():
        if stored[name].shape != arr.shape:
            raise CheckpointError(
                f"tensor {name} has shape {stored[name].shape}, expected {arr.shape}"
            )
        arr[...] = stored[name]
    return model, metadata
