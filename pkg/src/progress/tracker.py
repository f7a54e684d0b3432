"""Training progress display and machine-readable loss logging."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import TextIO, final

import numpy as np
from numpy.typing import NDArray
from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TaskID,
    TextColumn,
    TimeElapsedColumn,
)
from rich.table import Table

from src.models.losses import LossValues
from src.models.report import MetricsReport
from src.parsers.image_loader import save_image

LOG_COLUMNS = ("iter", "l_a", "l_b", "l_rec", "l_g", "l_all", "lr", "n")


@final
class TrainingTracker:
    """Writes the per-iteration loss log and reports progress on stderr."""

    def __init__(
        self,
        console: Console | None = None,
        out_dir: Path | None = None,
        debug_dumps: bool = False,
        keep_history: bool = False,
    ) -> None:
        """Initialize the tracker.

        Args:
            console: Rich console instance. If None, creates one bound to stderr.
            out_dir: Directory for ``train_log.csv`` and debug dumps; None disables files
            debug_dumps: Write sketch and mask PNGs under ``out_dir/debug``
            keep_history: Keep every logged iteration in ``history``
        """
        self.console = console or Console(stderr=True)
        self.out_dir = out_dir
        self.debug_dumps = debug_dumps and out_dir is not None
        self.keep_history = keep_history
        self._log_file: TextIO | None = None
        self._writer: csv.writer | None = None  # pyright: ignore[reportGeneralTypeIssues]
        self.history: list[tuple[int, LossValues]] = []

    @property
    def log_path(self) -> Path | None:
        return self.out_dir / "train_log.csv" if self.out_dir else None

    def open_log(self, resume: bool = False) -> None:
        """Open the CSV loss log, appending when resuming an existing run."""
        path = self.log_path
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        append = resume and path.exists()
        try:
            self._log_file = path.open("a" if append else "w", newline="", encoding="utf-8")
        except OSError as e:
            raise OSError(f"Cannot open training log {path}: {e}") from e
        self._writer = csv.writer(self._log_file)
        if not append:
            self._writer.writerow(LOG_COLUMNS)

    def close_log(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None
            self._writer = None

    def record(self, iteration: int, losses: LossValues, lr: float, n: int) -> None:
        """Append one iteration to the loss log."""
        if self.keep_history:
            self.history.append((iteration, losses))
        if self._writer is None:
            return
        self._writer.writerow(
            [iteration, *(repr(v) for v in losses.as_row().values()), repr(lr), n]
        )
        assert self._log_file is not None
        self._log_file.flush()

    @contextmanager
    def track_training(self, total_iters: int, start_iter: int = 0) -> Iterator[TrainProgressContext]:
        """Context manager showing an iteration progress bar.

        Yields:
            TrainProgressContext for advancing the bar
        """
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TextColumn("l_all {task.fields[l_all]}"),
            TimeElapsedColumn(),
            console=self.console,
        ) as progress:
            task_id = progress.add_task(
                "Training", total=total_iters, completed=start_iter, l_all="-"
            )
            yield TrainProgressContext(progress, task_id)

    def dump_debug(self, iteration: int, name: str, array: NDArray[np.floating]) -> None:
        """Write an ``(H, W)`` map as an 8-bit grayscale PNG, scaled by its maximum."""
        if not self.debug_dumps or self.out_dir is None:
            return
        data = np.asarray(array, dtype=np.float32)
        peak = float(data.max()) if data.size else 0.0
        if peak > 0:
            data = data / peak
        save_image(self.out_dir / "debug" / f"{iteration:06d}_{name}.png", data[None])

    def display_metrics(self, report: MetricsReport, title: str = "Validation") -> None:
        """Display a metrics report as a table.

        Args:
            report: Aggregated metrics
            title: Table title
        """
        table = Table(title=title)
        table.add_column("Class", style="cyan")
        for column in ("Dice (%)", "Jaccard (%)", "95HD (px)", "ASD (px)"):
            table.add_column(column, style="green", justify="right")

        for cls, m in sorted(report.per_class.items()):
            table.add_row(str(cls), *_fmt(m.dice, m.jaccard, m.hd95, m.asd))
        m = report.mean
        table.add_row("mean", *_fmt(m.dice, m.jaccard, m.hd95, m.asd), style="bold")

        self.console.print(table)
        excluded = sum(report.excluded.values())
        if excluded:
            self.display_info(f"{excluded} class/case pairs excluded from surface distances")

    def display_error(self, message: str, exception: Exception | None = None) -> None:
        """Display an error message with optional exception details."""
        self.console.print(f"[red]Error: {message}[/red]")
        if exception:
            self.console.print(f"[dim]Details: {exception}[/dim]")

    def display_warning(self, message: str) -> None:
        self.console.print(f"[yellow]Warning: {message}[/yellow]")

    def display_success(self, message: str) -> None:
        self.console.print(f"[green]✓[/green] {message}")

    def display_info(self, message: str) -> None:
        self.console.print(f"[blue]Info: {message}[/blue]")


def _fmt(*values: float) -> list[str]:
    return ["n/a" if math.isnan(v) else f"{v:.2f}" for v in values]


@final
class TrainProgressContext:
    """Handle for advancing the training progress bar."""

    def __init__(self, progress: Progress, task_id: TaskID) -> None:
        self.progress = progress
        self.task_id = task_id

    def update(self, losses: LossValues) -> None:
        self.progress.update(self.task_id, advance=1, l_all=f"{losses.l_all:.4f}")
