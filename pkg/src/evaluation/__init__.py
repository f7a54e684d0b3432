"""Segmentation quality metrics."""

from .metrics import aggregate, dice_jaccard, evaluate_case, surface_distances
from .report import REPORT_COLUMNS, write_report

__all__ = [
    "REPORT_COLUMNS",
    "aggregate",
    "dice_jaccard",
    "evaluate_case",
    "surface_distances",
    "write_report",
]
