"""Command-line entry point.

Subcommands: prepare, train, eval, predict, gradcheck, synth. Exit codes:
0 success, 1 runtime/verification failure, 2 usage error. Configuration
precedence is defaults < policy/config file < command-line flags, and every
effective value is echoed at startup so runs are reproducible from the log.

All randomness funnels through one ``--seed``; derived streams are labeled
(split=1, augment=2, init=3, shuffle=4). Execution is single-process and
single-worker, so results are bit-reproducible for a fixed seed;
``--deterministic`` is accepted for explicitness and pins exactly that mode.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .data.augment import AugmentPolicy, load_policy, preprocess_eval, save_policy
from .data.images import read_ppm
from .data.manifest import (
    SplitSpec,
    load_dataset,
    load_manifest,
    save_manifest,
    stratified_split,
)
from .data.synth import synth_dataset
from .errors import ContextVitError
from .evaluation.runner import evaluate, export, format_report_table
from .gradcheck import run_gradcheck
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.config import ModelConfig
from .model.network import Model, forward
from .training.loop import TrainConfig, fit, load_epoch_log, save_epoch_log


class UsageError(Exception):
    """Bad invocation detected before any work starts (exit code 2)."""


def _existing_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} {path} does not exist")
    return p


def _existing_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} {path} does not exist")
    return p


def _echo(args, items: dict) -> None:
    if getattr(args, "quiet", False):
        return
    for key, value in items.items():
        print(f"  {key} = {value}")


def _echo_seed(args) -> None:
    if not getattr(args, "quiet", False):
        print(f"  seed = {args.seed} (streams: split=1, augment=2, init=3, shuffle=4)")


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


# ---------------------------------------------------------------------------
# shared flag groups
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed for all rng streams")
    parser.add_argument("--quiet", action="store_true", help="suppress config echo")
    parser.add_argument(
        "--deterministic", action="store_true",
        help="force single-worker bit-reproducible mode (the only mode implemented)",
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--input-size", type=int, default=64, help="square input edge in pixels")
    group.add_argument("--patch-size", type=int, default=8)
    group.add_argument("--stage-depths", type=_csv_ints, default=(2, 2), metavar="N,N,...")
    group.add_argument("--stage-dims", type=_csv_ints, default=(32, 64), metavar="D,D,...")
    group.add_argument("--num-heads", type=_csv_ints, default=(2, 2), metavar="H,H,...")
    group.add_argument("--num-classes", type=int, default=None,
                       help="default: class count of the training manifest")
    group.add_argument("--stem-channels", type=int, default=8)
    group.add_argument("--mlp-ratio", type=int, default=4)


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--batch-size", type=int, default=32)
    group.add_argument("--max-epochs", type=int, default=100)
    group.add_argument("--lr-max", type=float, default=1e-4)
    group.add_argument("--lr-min", type=float, default=0.0)
    group.add_argument("--weight-decay", type=float, default=1e-4)
    group.add_argument("--label-smoothing", type=float, default=0.1)
    group.add_argument("--patience", type=int, default=5)
    group.add_argument("--schedule-kind", choices=("cosine", "step"), default="cosine")
    group.add_argument("--step-milestones", type=_csv_ints, default=(), metavar="E,E,...")
    group.add_argument("--step-gamma", type=float, default=0.1)


def _add_policy_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("augmentation policy (overrides --policy file)")
    group.add_argument("--policy", default=None, help="JSON policy file")
    group.add_argument("--crop-size", type=int, default=None)
    group.add_argument("--scale-range", type=_csv_floats, default=None, metavar="LO,HI")
    group.add_argument("--max-rotation", type=float, default=None)
    group.add_argument("--hflip-prob", type=float, default=None)
    group.add_argument("--jitter-limits", type=_csv_floats, default=None, metavar="B,C,S")
    group.add_argument("--normalization-mean", type=_csv_floats, default=None, metavar="R,G,B")
    group.add_argument("--normalization-std", type=_csv_floats, default=None, metavar="R,G,B")


def _resolve_policy(args, crop_default: int) -> AugmentPolicy:
    """defaults < policy file < explicit flags."""
    values = dataclasses.asdict(AugmentPolicy(crop_size=crop_default))
    if args.policy is not None:
        file_policy = load_policy(_existing_file(args.policy, "policy file"))
        values.update(dataclasses.asdict(file_policy))
    for flag, key in [
        ("crop_size", "crop_size"),
        ("scale_range", "scale_range"),
        ("max_rotation", "max_rotation"),
        ("hflip_prob", "hflip_prob"),
        ("jitter_limits", "jitter_limits"),
        ("normalization_mean", "normalization_mean"),
        ("normalization_std", "normalization_std"),
    ]:
        override = getattr(args, flag)
        if override is not None:
            values[key] = override
    return AugmentPolicy(**values)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_prepare(args) -> int:
    root = _existing_dir(args.data_root, "dataset root")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = SplitSpec(train_fraction=args.train_fraction, seed=args.seed, stratified=args.stratified)
    print("prepare:")
    _echo(args, {"data_root": root, "out": out, "train_fraction": spec.train_fraction,
                 "stratified": spec.stratified})
    _echo_seed(args)

    manifest = load_dataset(root)
    train, val = stratified_split(manifest, spec)
    save_manifest(out / "train_manifest.csv", train, "train")
    save_manifest(out / "val_manifest.csv", val, "val")

    lines = ["class_name,total,train,val"]
    train_counts, val_counts = train.counts, val.counts
    for cid, name in enumerate(manifest.class_names):
        lines.append(f"{name},{manifest.counts[cid]},{train_counts[cid]},{val_counts[cid]}")
    lines.append(f"TOTAL,{len(manifest)},{len(train)},{len(val)}")
    (out / "split_summary.csv").write_text("\n".join(lines) + "\n")

    print(f"wrote {out / 'train_manifest.csv'} ({len(train)} samples)")
    print(f"wrote {out / 'val_manifest.csv'} ({len(val)} samples)")
    print(f"wrote {out / 'split_summary.csv'}")
    return 0


def cmd_train(args) -> int:
    train_manifest = load_manifest(_existing_file(args.train_manifest, "train manifest"))
    val_manifest = load_manifest(_existing_file(args.val_manifest, "val manifest"),
                                 class_names=train_manifest.class_names)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    num_classes = args.num_classes if args.num_classes is not None else train_manifest.num_classes
    model_cfg = ModelConfig(
        input_size=(args.input_size, args.input_size),
        patch_size=args.patch_size,
        stage_depths=args.stage_depths,
        stage_dims=args.stage_dims,
        num_heads=args.num_heads,
        num_classes=num_classes,
        stem_channels=args.stem_channels,
        mlp_ratio=args.mlp_ratio,
    )
    train_cfg = TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        lr_max=args.lr_max,
        lr_min=args.lr_min,
        weight_decay=args.weight_decay,
        label_smoothing=args.label_smoothing,
        patience=args.patience,
        seed=args.seed,
        schedule_kind=args.schedule_kind,
        step_milestones=args.step_milestones,
        step_gamma=args.step_gamma,
    )
    policy = _resolve_policy(args, crop_default=args.input_size)
    if policy.crop_size != args.input_size:
        raise UsageError(
            f"policy crop_size {policy.crop_size} must equal model input size {args.input_size}"
        )

    print("train:")
    _echo(args, dataclasses.asdict(model_cfg))
    _echo(args, dataclasses.asdict(train_cfg))
    _echo(args, dataclasses.asdict(policy))
    _echo_seed(args)

    model = Model.init(model_cfg, seed=args.seed)
    metadata = {
        "class_names": train_manifest.class_names,
        "train_config": dataclasses.asdict(train_cfg),
        "policy": dataclasses.asdict(policy),
    }
    save_policy(out / "policy_used.json", policy)

    if train_cfg.max_epochs == 0:
        save_checkpoint(out / "checkpoint.npz", model, metadata)
        save_epoch_log(out / "epoch_log.csv", [])
        print(f"max_epochs=0: wrote initial checkpoint to {out / 'checkpoint.npz'}")
        return 0

    result = fit(model, train_manifest, val_manifest, train_cfg, policy)
    metadata.update(
        best_epoch=result.best_epoch,
        best_val_accuracy=result.best_val_accuracy,
        stopped_early=result.stopped_early,
        epochs_run=len(result.records),
    )
    save_checkpoint(out / "checkpoint.npz", result.model, metadata)
    save_epoch_log(out / "epoch_log.csv", result.records)

    last = result.records[-1]
    summary = {
        "epochs_run": len(result.records),
        "stopped_early": result.stopped_early,
        "best_epoch": result.best_epoch,
        "best_val_accuracy": result.best_val_accuracy,
        "final_train_accuracy": last.train_accuracy,
        "final_val_accuracy": last.val_accuracy,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"best epoch {result.best_epoch} val accuracy {result.best_val_accuracy:.4f}")
    print(f"wrote {out / 'checkpoint.npz'}, {out / 'epoch_log.csv'}, {out / 'summary.json'}")
    return 0


def cmd_eval(args) -> int:
    model, metadata = load_checkpoint(_existing_file(args.checkpoint, "checkpoint"))
    manifest = load_manifest(_existing_file(args.manifest, "manifest"),
                             class_names=metadata.get("class_names"))
    out = Path(args.out)

    if args.policy is not None:
        policy = load_policy(_existing_file(args.policy, "policy file"))
    elif "policy" in metadata:
        policy = AugmentPolicy(**metadata["policy"])
    else:
        policy = AugmentPolicy(crop_size=model.config.input_size[0])

    print("eval:")
    _echo(args, {"checkpoint": args.checkpoint, "manifest": args.manifest, "out": out})

    records = load_epoch_log(args.epoch_log) if args.epoch_log else []
    matrix, rep = evaluate(model, manifest, policy)
    paths = export(rep, matrix, records, out)
    if not args.quiet:
        print(format_report_table(rep))
    print(f"accuracy {rep.accuracy:.4f}")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_predict(args) -> int:
    model, metadata = load_checkpoint(_existing_file(args.checkpoint, "checkpoint"))
    image_path = _existing_file(args.image, "image")
    class_names = metadata.get(
        "class_names", [f"class_{i:02d}" for i in range(model.config.num_classes)]
    )

    if args.policy is not None:
        policy = load_policy(_existing_file(args.policy, "policy file"))
    elif "policy" in metadata:
        policy = AugmentPolicy(**metadata["policy"])
    else:
        policy = AugmentPolicy(crop_size=model.config.input_size[0])

    prepared = preprocess_eval(read_ppm(image_path), policy)
    probs = forward(prepared.values, model)
    ranking = np.argsort(-probs)
    print(f"prediction: {class_names[ranking[0]]}")
    for idx in ranking:
        print(f"  {class_names[idx]:<20} {probs[idx]:.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    print("gradcheck:")
    _echo_seed(args)
    results = run_gradcheck(seed=args.seed, corrupt=args.corrupt_gradient)
    for res in results:
        print(res.line())
    if all(r.passed for r in results):
        print("all gradient checks passed")
        return 0
    print("gradient check FAILED", file=sys.stderr)
    return 1


def cmd_synth(args) -> int:
    out = Path(args.out)
    print("synth:")
    _echo(args, {"out": out, "num_classes": args.num_classes,
                 "per_class": args.per_class, "image_size": args.image_size})
    _echo_seed(args)
    manifest = synth_dataset(out, args.num_classes, args.per_class, args.image_size, args.seed)
    save_manifest(out / "manifest.csv", manifest, "all")
    print(f"wrote {len(manifest)} images in {args.num_classes} classes under {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contextvit",
        description="Global-context vision transformer: data prep, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="split a folder-per-class dataset into train/val manifests")
    p.add_argument("--data-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=True)
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model from manifests")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--val-manifest", required=True)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    _add_train_flags(p)
    _add_policy_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest, export report files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--policy", default=None)
    p.add_argument("--epoch-log", default=None,
                   help="optional training log to copy into curves.csv")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify a single PPM image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--policy", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="generate a synthetic color/texture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--num-classes", type=int, default=12)
    p.add_argument("--per-class", type=int, default=8)
    p.add_argument("--image-size", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ContextVitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
