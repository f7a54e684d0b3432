"""Segmentation metrics: Dice, Jaccard, 95% Hausdorff distance and ASD.

Overlap metrics are reported in percent, distances in pixels. Boundaries are
class pixels with at least one 4-neighbour of another class; the image border
is not a transition. A class that fills the whole image falls back to its
outer ring so distances stay defined.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from src.models.report import CaseMetrics, ClassMetrics, MetricsReport

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def dice_jaccard(pred: NDArray[np.integer], gt: NDArray[np.integer], cls: int) -> tuple[float, float]:
    """Dice and Jaccard of one class in percent.

    Both masks empty for the class gives (100, 100); exactly one empty gives (0, 0).
    """
    _check_shapes(pred, gt)
    a = pred == cls
    b = gt == cls
    size_a = int(a.sum())
    size_b = int(b.sum())
    if size_a == 0 and size_b == 0:
        return 100.0, 100.0
    inter = int(np.logical_and(a, b).sum())
    union = size_a + size_b - inter
    return 200.0 * inter / (size_a + size_b), 100.0 * inter / union


def class_boundary(mask: NDArray[np.bool_]) -> NDArray[np.bool_]:
    """Boundary pixels of a binary mask on the 4-neighbourhood."""
    boundary = mask & ~ndimage.binary_erosion(mask, structure=_FOUR_CONNECTED, border_value=1)
    if mask.any() and not boundary.any():
        return mask & ~ndimage.binary_erosion(mask, structure=_FOUR_CONNECTED, border_value=0)
    return boundary


def directed_distances(source: NDArray[np.bool_], target: NDArray[np.bool_]) -> NDArray[np.float64]:
    """Euclidean distance from every source boundary pixel to the nearest target boundary pixel."""
    src_border = class_boundary(source)
    tgt_border = class_boundary(target)
    field = ndimage.distance_transform_edt(~tgt_border)
    return np.asarray(field, dtype=np.float64)[src_border]


def surface_distances(
    pred: NDArray[np.integer], gt: NDArray[np.integer], cls: int
) -> tuple[float, float] | None:
    """95% Hausdorff distance and average surface distance of one class.

    hd95 is the larger of the two directed 95th percentiles (linear
    interpolation); asd is the mean of both directions pooled.

    Returns:
        ``(hd95, asd)`` or None when the class is absent from either mask
    """
    _check_shapes(pred, gt)
    a = pred == cls
    b = gt == cls
    if not a.any() or not b.any():
        return None

    d_ab = directed_distances(a, b)
    d_ba = directed_distances(b, a)
    hd95 = max(float(np.percentile(d_ab, 95)), float(np.percentile(d_ba, 95)))
    asd = float(np.concatenate([d_ab, d_ba]).mean())
    return hd95, asd


def evaluate_case(
    pred: NDArray[np.integer], gt: NDArray[np.integer], k_fg: int, case: str = ""
) -> CaseMetrics:
    """All four metrics for every foreground class of one case.

    Classes excluded from surface metrics carry NaN distances.
    """
    per_class: dict[int, ClassMetrics] = {}
    for cls in range(1, k_fg + 1):
        dice, jaccard = dice_jaccard(pred, gt, cls)
        distances = surface_distances(pred, gt, cls)
        hd95, asd = distances if distances is not None else (math.nan, math.nan)
        per_class[cls] = ClassMetrics(dice=dice, jaccard=jaccard, hd95=hd95, asd=asd)
    return CaseMetrics(case=case, per_class=per_class)


def aggregate(cases: list[CaseMetrics], k_fg: int) -> MetricsReport:
    """Average case metrics per class, then over foreground classes.

    Raises:
        ValueError: If ``cases`` is empty
    """
    if not cases:
        raise ValueError("Cannot aggregate metrics over zero cases")

    per_class: dict[int, ClassMetrics] = {}
    excluded: dict[int, int] = {}
    for cls in range(1, k_fg + 1):
        rows = [c.per_class[cls] for c in cases]
        valid = [r for r in rows if not math.isnan(r.hd95)]
        excluded[cls] = len(rows) - len(valid)
        per_class[cls] = ClassMetrics(
            dice=float(np.mean([r.dice for r in rows])),
            jaccard=float(np.mean([r.jaccard for r in rows])),
            hd95=float(np.mean([r.hd95 for r in valid])) if valid else math.nan,
            asd=float(np.mean([r.asd for r in valid])) if valid else math.nan,
        )

    mean = ClassMetrics(
        dice=float(np.mean([m.dice for m in per_class.values()])),
        jaccard=float(np.mean([m.jaccard for m in per_class.values()])),
        hd95=_nanmean([m.hd95 for m in per_class.values()]),
        asd=_nanmean([m.asd for m in per_class.values()]),
    )
    return MetricsReport(per_class=per_class, mean=mean, excluded=excluded, cases=list(cases))


def _nanmean(values: list[float]) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else math.nan


def _check_shapes(pred: NDArray[np.integer], gt: NDArray[np.integer]) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"Shape mismatch: {pred.shape} vs {gt.shape}")
