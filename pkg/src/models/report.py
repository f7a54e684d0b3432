"""Segmentation metrics data models."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ClassMetrics:
    """Dice/Jaccard in percent, surface distances in pixels."""

    dice: float
    jaccard: float
    hd95: float
    asd: float


@dataclass
class CaseMetrics:
    """Metrics of one evaluated case, keyed by class id."""

    case: str
    per_class: dict[int, ClassMetrics]


@dataclass
class MetricsReport:
    """Aggregated validation metrics.

    ``per_class`` averages over cases; ``mean`` averages the per-class values
    over foreground classes. Surface distances are averaged only over cases
    where the class is present in both masks; ``excluded`` counts the rest.
    """

    per_class: dict[int, ClassMetrics]
    mean: ClassMetrics
    excluded: dict[int, int] = field(default_factory=dict)
    cases: list[CaseMetrics] = field(default_factory=list)

    @property
    def mean_dice(self) -> float:
        return self.mean.dice
