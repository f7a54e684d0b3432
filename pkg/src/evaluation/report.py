"""CSV serialization of metrics reports."""

from __future__ import annotations

import csv
from pathlib import Path

from src.models.report import ClassMetrics, MetricsReport

REPORT_COLUMNS = ("class", "dice", "jaccard", "hd95", "asd")


def _row(label: str, m: ClassMetrics) -> list[object]:
    return [label, m.dice, m.jaccard, m.hd95, m.asd]


def write_report(report: MetricsReport, out_dir: Path) -> tuple[Path, Path]:
    """Write ``metrics.csv`` (per class + mean) and ``metrics_cases.csv``.

    Args:
        report: Aggregated metrics
        out_dir: Destination directory (created if missing)

    Returns:
        Paths of the summary and per-case files

    Raises:
        OSError: If the files cannot be written
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = out_dir / "metrics.csv"
    per_case = out_dir / "metrics_cases.csv"

    try:
        with summary.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_COLUMNS)
            for cls, metrics in sorted(report.per_class.items()):
                writer.writerow(_row(str(cls), metrics))
            writer.writerow(_row("mean", report.mean))

        with per_case.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(("case", *REPORT_COLUMNS))
            for case in report.cases:
                for cls, metrics in sorted(case.per_class.items()):
                    writer.writerow([case.case, *_row(str(cls), metrics)])
    except OSError as e:
        raise OSError(f"Failed to write metrics report to {out_dir}: {e}") from e

    return summary, per_case
