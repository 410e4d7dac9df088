"""Dataset manifests: folder-per-class ingestion, stratified splitting, CSV I/O.

Expected on-disk layout is ``root/<class_name>/<image>.ppm``. Class ids follow
the lexicographic order of the class directory names, and files are listed in
sorted order, so a manifest is stable across runs and machines.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DatasetError

IMAGE_SUFFIXES = {".ppm"}

# Labels for deriving independent rng streams from one master seed.
STREAM_SPLIT = 1
STREAM_AUGMENT = 2
STREAM_SHUFFLE = 4


@dataclass
class DatasetManifest:
    entries: list[tuple[str, int]]          # (image path, class id)
    class_names: list[str]

    def __post_init__(self):
        for path, class_id in self.entries:
            if not (0 <= class_id < len(self.class_names)):
                raise DatasetError(f"entry {path} has class id {class_id} out of range")
        paths = [p for p, _ in self.entries]
        if len(set(paths)) != len(paths):
            raise DatasetError("manifest contains duplicate paths")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def counts(self) -> list[int]:
        """Per-class entry totals, index-aligned with class_names."""
        totals = [0] * len(self.class_names)
        for _, class_id in self.entries:
            totals[class_id] += 1
        return totals


def load_dataset(root_dir: str | Path) -> DatasetManifest:
    """Scan a folder-per-class tree into a manifest.

    Raises :class:`DatasetError` when the root has no class directories, a
    class directory has no images, or image files exist but are unreadable
    (every offender is listed, none silently skipped).
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DatasetError(f"no classes found under {root}")

    class_names = [d.name for d in class_dirs]
    entries: list[tuple[str, int]] = []
    empty: list[str] = []
    unreadable: list[str] = []
    for class_id, cdir in enumerate(class_dirs):
        files = sorted(p for p in cdir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            empty.append(cdir.name)
            continue
        for p in files:
            try:
                with open(p, "rb") as fh:
                    fh.read(2)
            except OSError:
                unreadable.append(str(p))
                continue
            entries.append((str(p), class_id))

    problems = []
    if empty:
        problems.append(f"classes with no images: {empty}")
    if unreadable:
        problems.append(f"unreadable files: {unreadable}")
    if problems:
        raise DatasetError(f"dataset {root} is unusable: " + "; ".join(problems))
    return DatasetManifest(entries=entries, class_names=class_names)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def stratified_split(manifest: DatasetManifest, spec: SplitSpec) -> tuple[DatasetManifest, DatasetManifest]:
    """Partition a manifest into (train, val) preserving class proportions.

    Per class with n samples, train receives floor(train_fraction * n + 0.5);
    membership is a seeded permutation, so one seed gives one split.
    """
    counts = manifest.counts
    for class_id, n in enumerate(counts):
        if n == 0:
            raise DatasetError(f"class {manifest.class_names[class_id]} has no samples")

    rng = np.random.default_rng([spec.seed, STREAM_SPLIT])
    by_class: list[list[int]] = [[] for _ in manifest.class_names]
    for idx, (_, class_id) in enumerate(manifest.entries):
        by_class[class_id].append(idx)

    train_idx: list[int] = []
    val_idx: list[int] = []
    for class_id, members in enumerate(by_class):
        if spec.stratified:
            order = rng.permutation(len(members))
            n_train = int(np.floor(spec.train_fraction * len(members) + 0.5))
            picked = [members[i] for i in order]
            train_idx.extend(picked[:n_train])
            val_idx.extend(picked[n_train:])
        else:
            train_idx.extend(members)
    if not spec.stratified:
        order = rng.permutation(len(train_idx))
        n_train = int(np.floor(spec.train_fraction * len(train_idx) + 0.5))
        shuffled = [train_idx[i] for i in order]
        train_idx, val_idx = shuffled[:n_train], shuffled[n_train:]

    train_idx.sort()
    val_idx.sort()
    train = DatasetManifest(
        entries=[manifest.entries[i] for i in train_idx], class_names=list(manifest.class_names)
    )
    val = DatasetManifest(
        entries=[manifest.entries[i] for i in val_idx], class_names=list(manifest.class_names)
    )
    return train, val


MANIFEST_HEADER = ["path", "class_id", "class_name", "split"]


def save_manifest(path: str | Path, manifest: DatasetManifest, split: str) -> None:
    """Write ``path,class_id,class_name,split`` rows; byte-stable across runs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for entry_path, class_id in manifest.entries:
            writer.writerow([entry_path, class_id, manifest.class_names[class_id], split])


def load_manifest(path: str | Path, class_names: list[str] | None = None) -> DatasetManifest:
    """Read a manifest CSV.

    When ``class_names`` is given (e.g. from a checkpoint) it becomes the
    authoritative vocabulary and every row is validated against it; otherwise
    the vocabulary is reconstructed from the rows, which requires every class
    id up to the maximum to appear at least once.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise DatasetError(f"{path}: expected header {MANIFEST_HEADER}, got {header}")
        rows = list(reader)
    if not rows:
        raise DatasetError(f"{path}: manifest has no entries")

    names_by_id: dict[int, str] = {}
    entries = []
    for row in rows:
        if len(row) != 4:
            raise DatasetError(f"{path}: malformed row {row}")
        entry_path, class_id_s, class_name, _split = row
        class_id = int(class_id_s)
        if names_by_id.setdefault(class_id, class_name) != class_name:
            raise DatasetError(f"{path}: class id {class_id} maps to multiple names")
        entries.append((entry_path, class_id))

    if class_names is not None:
        for cid, name in names_by_id.items():
            if cid >= len(class_names) or class_names[cid] != name:
                raise DatasetError(
                    f"{path}: class {cid} ({name!r}) does not match expected vocabulary"
                )
        return DatasetManifest(entries=entries, class_names=list(class_names))

    max_id = max(names_by_id)
    reconstructed = []
    for cid in range(max_id + 1):
        if cid not in names_by_id:
            raise DatasetError(f"{path}: class id {cid} missing from manifest")
        reconstructed.append(names_by_id[cid])
    return DatasetManifest(entries=entries, class_names=reconstructed)
