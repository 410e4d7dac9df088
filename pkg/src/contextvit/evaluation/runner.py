"""Model evaluation over a manifest and file export of results.

Export writes four CSVs with fixed headers:

    report.csv     per-class precision/recall/f1/support + Accuracy /
                   Macro Avg / Weighted Avg footer rows
    confusion.csv  count grid, first column = true class name
    per_class.csv  per-class accuracy (the recall column)
    curves.csv     per-epoch training records (header only if none given)

Numbers are written with full repr precision so repeated runs produce
byte-identical files; pretty 2-decimal rendering is a display concern
(see :func:`format_report_table`).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..data.augment import AugmentPolicy, preprocess_eval
from ..data.images import read_ppm
from ..data.manifest import DatasetManifest
from ..errors import ContextVitError, DimensionError
from ..model.network import Model, forward_with_cache
from ..training.loop import EpochRecord, save_epoch_log
from .metrics import ClassificationReport, ConfusionMatrix, confusion_matrix, per_class_accuracy, report


def evaluate(model: Model, manifest: DatasetManifest,
             policy: AugmentPolicy) -> tuple[ConfusionMatrix, ClassificationReport]:
    """Run eval preprocessing + forward over every manifest entry.

    Decode or forward failures are re-raised with the offending sample path.
    """
    if manifest.num_classes != model.config.num_classes:
        raise DimensionError(
            f"manifest has {manifest.num_classes} classes, model expects {model.config.num_classes}"
        )
    predictions = []
    labels = []
    for path, label in manifest.entries:
        try:
            prepared = preprocess_eval(read_ppm(path), policy)
            logits, _ = forward_with_cache(prepared.values, model)
        except ContextVitError as exc:
            raise type(exc)(f"while evaluating {path}: {exc}") from exc
        predictions.append(int(np.argmax(logits)))
        labels.append(label)

    matrix = confusion_matrix(predictions, labels, manifest.num_classes, manifest.class_names)
    return matrix, report(matrix)


REPORT_HEADER = ["name", "precision", "recall", "f1", "support", "flags"]
PER_CLASS_HEADER = ["name", "accuracy", "support", "flags"]


def _write_rows(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def export(rep: ClassificationReport, matrix: ConfusionMatrix,
           records: list[EpochRecord], out_dir: str | Path) -> dict[str, Path]:
    """Write the four result files into ``out_dir``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("report", "confusion", "per_class", "curves")}

    rows = [REPORT_HEADER]
    for i, name in enumerate(rep.class_names):
        flags = "zero_division" if name in rep.degenerate else ""
        rows.append([name, repr(float(rep.precision[i])), repr(float(rep.recall[i])),
                     repr(float(rep.f1[i])), int(rep.support[i]), flags])
    rows.append(["Accuracy", "", "", repr(rep.accuracy), rep.total, ""])
    rows.append(["Macro Avg", repr(rep.macro_precision), repr(rep.macro_recall),
                 repr(rep.macro_f1), rep.total, ""])
    rows.append(["Weighted Avg", repr(rep.weighted_precision), repr(rep.weighted_recall),
                 repr(rep.weighted_f1), rep.total, ""])
    _write_rows(paths["report"], rows)

    grid = [["true\\predicted", *matrix.class_names]]
    for i, name in enumerate(matrix.class_names):
        grid.append([name, *(int(v) for v in matrix.counts[i])])
    _write_rows(paths["confusion"], grid)

    acc = per_class_accuracy(matrix)
    pc_rows = [PER_CLASS_HEADER]
    for i, name in enumerate(matrix.class_names):
        flags = "no_support" if matrix.support[i] == 0 else ""
        pc_rows.append([name, repr(float(acc[i])), int(matrix.support[i]), flags])
    _write_rows(paths["per_class"], pc_rows)

    save_epoch_log(paths["curves"], records)
    return paths


def read_confusion_csv(path: str | Path) -> ConfusionMatrix:
    """Parse a confusion.csv back into a matrix (round-trip of :func:`export`)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    class_names = rows[0][1:]
    counts = np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64)
    return ConfusionMatrix(counts=counts, class_names=class_names)


def format_report_table(rep: ClassificationReport) -> str:
    """Human-readable table, metrics rounded to two decimals."""
    name_w = max(len("Weighted Avg"), *(len(n) for n in rep.class_names))
    lines = [f"{'':<{name_w}}  precision  recall  f1-score  support"]
    for i, name in enumerate(rep.class_names):
        lines.append(
            f"{name:<{name_w}}  {rep.precision[i]:>9.2f}  {rep.recall[i]:>6.2f}"
            f"  {rep.f1[i]:>8.2f}  {int(rep.support[i]):>7d}"
        )
    lines.append("")
    lines.append(f"{'Accuracy':<{name_w}}  {'':>9}  {'':>6}  {rep.accuracy:>8.2f}  {rep.total:>7d}")
    lines.append(
        f"{'Macro Avg':<{name_w}}  {rep.macro_precision:>9.2f}  {rep.macro_recall:>6.2f}"
        f"  {rep.macro_f1:>8.2f}  {rep.total:>7d}"
    )
    lines.append(
        f"{'Weighted Avg':<{name_w}}  {rep.weighted_precision:>9.2f}  {rep.weighted_recall:>6.2f}"
        f"  {rep.weighted_f1:>8.2f}  {rep.total:>7d}"
    )
    return "\n".join(lines)
