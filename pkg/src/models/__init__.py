"""Data models for the reflectseg training pipeline."""

from .config import LossWeights, SketchParams, SsimParams, TrainConfig
from .dataset import BatchPair, DatasetIndex, LabeledPair, PhantomSpec
from .layout import MixLayout
from .losses import LossValues
from .report import CaseMetrics, ClassMetrics, MetricsReport

__all__ = [
    "BatchPair",
    "CaseMetrics",
    "ClassMetrics",
    "DatasetIndex",
    "LabeledPair",
    "LossValues",
    "LossWeights",
    "MetricsReport",
    "MixLayout",
    "PhantomSpec",
    "SketchParams",
    "SsimParams",
    "TrainConfig",
]
