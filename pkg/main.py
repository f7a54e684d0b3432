#!/usr/bin/env python3
"""
reflectseg

Semi-supervised segmentation training with a mean teacher, error reflection
and multi-scale puzzle mixing, plus evaluation, prediction and synthetic
phantom generation.

Usage:
    uv run main.py synth --out phantoms --count 100 --seed 7
    uv run main.py train --data phantoms --labeled-ratio 0.05 --out runs/full
    uv run main.py eval --checkpoint runs/full/checkpoints/best.pt --data phantoms
    uv run main.py predict --checkpoint runs/full/checkpoints/best.pt image.png mask.png
"""

from __future__ import annotations

import argparse
import sys
import traceback
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

from rich.console import Console

from src.config.settings import (
    add_config_arguments,
    default_data_root,
    overrides_from_namespace,
    resolve_config,
    save_config,
)
from src.errors import CheckpointError, ConfigError, DataError, DivergenceError, ReflectSegError
from src.evaluation.report import write_report
from src.generators.phantom import PhantomSetGenerator
from src.metadata.manifest import load_split_manifest, write_split_manifest
from src.models.dataset import PhantomSpec
from src.parsers.dataset_index import index_dataset
from src.parsers.image_loader import load_image, render_overlay, save_image, save_mask
from src.processors.trainer import (
    ReflectionTrainer,
    evaluate_model,
    load_cases,
    load_training_data,
    model_from_checkpoint,
    predict_mask,
)
from src.progress.tracker import TrainingTracker

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3

# Progress and messages go to stderr; files carry the machine-readable output
console = Console(stderr=True)


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        console.print(f"[red]Error: {message}[/red]")
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    """Build the command-line parser with the train, eval, predict and synth commands."""
    parser = _Parser(
        prog="reflectseg",
        description="Semi-supervised echocardiography segmentation with error reflection",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  reflectseg synth --out phantoms --count 100 --seed 7
  reflectseg train --data phantoms --labeled-ratio 0.05 --seed 1 --out runs/full
  reflectseg train --data phantoms --disable-ers --out runs/mixing-only
  reflectseg eval --checkpoint runs/full/checkpoints/best.pt --data phantoms
        """,
    )
    _ = parser.add_argument(
        "--verbose", "-v", action="store_true", help="Show tracebacks on failure"
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = commands.add_parser("train", help="Train a student/teacher pair")
    _ = train.add_argument("--config", type=Path, help="YAML config file")
    _ = train.add_argument(
        "--data", type=Path, help="Dataset root (default: $REFLECTSEG_DATA_ROOT)"
    )
    _ = train.add_argument(
        "--labeled-ratio",
        type=float,
        default=0.05,
        help="Fraction of labeled patients (ignored on --resume when <out>/split.json exists)",
    )
    _ = train.add_argument("--out", type=Path, default=Path("runs/latest"), help="Run directory")
    _ = train.add_argument("--resume", type=Path, help="Checkpoint to continue from")
    _ = train.add_argument(
        "--debug-dumps", action="store_true", help="Write sketch and mask PNGs under <out>/debug"
    )
    add_config_arguments(train)

    evaluate = commands.add_parser("eval", help="Evaluate a checkpoint")
    _ = evaluate.add_argument("--checkpoint", type=Path, required=True)
    _ = evaluate.add_argument(
        "--data", type=Path, help="Dataset root (default: $REFLECTSEG_DATA_ROOT)"
    )
    _ = evaluate.add_argument(
        "--split",
        choices=("labeled", "validation", "all"),
        default="validation",
        help="Cases to evaluate (default: validation)",
    )
    _ = evaluate.add_argument(
        "--split-manifest",
        type=Path,
        help="split.json of the training run (default: <run>/split.json if present)",
    )
    _ = evaluate.add_argument(
        "--labeled-ratio", type=float, default=0.05, help="Used when no split manifest exists"
    )
    _ = evaluate.add_argument("--out", type=Path, help="Report directory (default: beside the checkpoint)")
    _ = evaluate.add_argument("--use-teacher", action="store_true", help="Evaluate teacher weights")

    predict = commands.add_parser("predict", help="Segment one image")
    _ = predict.add_argument("--checkpoint", type=Path, required=True)
    _ = predict.add_argument("image", type=Path, help="Input raster")
    _ = predict.add_argument("out", type=Path, help="Output mask PNG")
    _ = predict.add_argument("--overlay", type=Path, help="Also write a colour overlay PNG")
    _ = predict.add_argument("--use-teacher", action="store_true", help="Predict with teacher weights")

    synth = commands.add_parser("synth", help="Generate a synthetic phantom dataset")
    defaults = PhantomSpec()
    _ = synth.add_argument("--out", type=Path, required=True, help="Output dataset root")
    _ = synth.add_argument("--count", type=int, default=100, help="Number of image/mask pairs")
    _ = synth.add_argument("--seed", type=int, default=defaults.seed)
    _ = synth.add_argument("--size", type=int, default=defaults.size)
    _ = synth.add_argument("--chambers", type=int, default=defaults.chambers)
    _ = synth.add_argument("--contrast", type=float, default=defaults.contrast)
    _ = synth.add_argument("--speckle-strength", type=float, default=defaults.speckle_strength)
    _ = synth.add_argument("--blur-sigma", type=float, default=defaults.blur_sigma)
    _ = synth.add_argument(
        "--frames-per-patient", type=int, default=1, help="Consecutive files sharing a patient id"
    )
    return parser


def _data_root(args: argparse.Namespace) -> Path:
    root: Path | None = args.data or default_data_root()
    if root is None:
        raise ConfigError("No data root: pass --data or set REFLECTSEG_DATA_ROOT")
    return root


def cmd_train(args: argparse.Namespace) -> int:
    """Train and write the config snapshot, split, log, checkpoints and metrics."""
    out_dir: Path = args.out
    config_path: Path | None = args.config
    snapshot = out_dir / "config.yaml"
    if config_path is None and args.resume is not None and snapshot.is_file():
        config_path = snapshot
    cfg = resolve_config(config_path, overrides_from_namespace(args))

    split_path = out_dir / "split.json"
    resuming = args.resume is not None and split_path.is_file()
    if resuming:
        index = load_split_manifest(split_path)
    else:
        index = index_dataset(_data_root(args), args.labeled_ratio, cfg.seed)
    console.print(
        f"[green]✓[/green] {len(index.labeled_patients)} labeled / "
        f"{len(index.unlabeled_patients)} unlabeled patients, "
        f"{len(index.validation)} validation images"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, snapshot)
    if not resuming:
        write_split_manifest(index, split_path)

    tracker = TrainingTracker(console, out_dir, debug_dumps=args.debug_dumps)
    trainer = ReflectionTrainer(cfg, load_training_data(index, cfg), out_dir, tracker)
    if args.resume is not None:
        trainer.resume(args.resume)

    report = trainer.run()
    if report is None:
        tracker.display_warning("No validation cases; metrics report not written")
    else:
        tracker.display_metrics(report, title="Final validation")
        summary, _ = write_report(report, out_dir)
        tracker.display_success(f"Metrics written to {summary}")
    tracker.display_success(f"Training finished after {trainer.state.iteration} iterations")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Evaluate a checkpoint on one side of the split and write the metrics CSVs."""
    model, cfg = model_from_checkpoint(args.checkpoint, use_teacher=args.use_teacher)

    manifest: Path | None = args.split_manifest
    run_manifest = args.checkpoint.parent.parent / "split.json"
    if manifest is None and args.data is None and run_manifest.is_file():
        manifest = run_manifest
    if manifest is not None:
        index = load_split_manifest(manifest)
    else:
        index = index_dataset(_data_root(args), args.labeled_ratio, cfg.seed)

    pairs = {
        "labeled": index.labeled,
        "validation": index.validation,
        "all": index.labeled + index.validation,
    }[args.split]
    report = evaluate_model(model, load_cases(pairs, cfg), cfg.k_fg, cfg.device)

    tracker = TrainingTracker(console)
    weights = "teacher" if args.use_teacher else "student"
    tracker.display_metrics(report, title=f"{args.split} split, {weights} weights")
    summary, _ = write_report(report, args.out or args.checkpoint.parent)
    tracker.display_success(f"Metrics written to {summary}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    """Write the predicted label mask of one image, and optionally an overlay."""
    model, cfg = model_from_checkpoint(args.checkpoint, use_teacher=args.use_teacher)
    image = load_image(args.image, cfg.image_size, cfg.in_channels)
    mask = predict_mask(model, image, cfg.device)

    save_mask(args.out, mask)
    console.print(f"[green]✓[/green] Mask written to {args.out}")
    if args.overlay is not None:
        save_image(args.overlay, render_overlay(image, mask))
        console.print(f"[green]✓[/green] Overlay written to {args.overlay}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    """Write a phantom dataset in the images/ + masks/ layout."""
    spec = PhantomSpec(
        size=args.size,
        chambers=args.chambers,
        contrast=args.contrast,
        speckle_strength=args.speckle_strength,
        blur_sigma=args.blur_sigma,
        seed=args.seed,
    )
    _ = PhantomSetGenerator(console).generate(
        args.out, args.count, spec, frames_per_patient=args.frames_per_patient
    )
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "synth": cmd_synth,
}


def exit_code(error: BaseException) -> int:
    """Exit code for an error raised by a command."""
    if isinstance(error, DivergenceError):
        return EXIT_DIVERGED
    if isinstance(error, (DataError, CheckpointError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    verbose_mode: bool = getattr(args, "verbose", False)
    if verbose_mode:
        console.print("[dim]Verbose mode enabled[/dim]")

    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user.[/yellow]")
        return EXIT_USAGE
    except (ReflectSegError, ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        if verbose_mode:
            console.print(f"[dim]{traceback.format_exc()}[/dim]")
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
