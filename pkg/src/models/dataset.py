"""Dataset and phantom data models."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import torch


@dataclass(frozen=True)
class LabeledPair:
    """Image file with its integer mask file."""

    patient: str
    image: Path
    mask: Path


@dataclass
class DatasetIndex:
    """Patient-level labeled/unlabeled split of a dataset root."""

    root: Path
    labeled: list[LabeledPair]
    unlabeled: list[Path]
    validation: list[LabeledPair]
    labeled_ratio: float
    seed: int
    labeled_patients: list[str] = field(default_factory=list)
    unlabeled_patients: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class PhantomSpec:
    """Synthetic echo-like phantom parameters."""

    size: int = 64
    chambers: int = 4
    contrast: float = 0.25
    speckle_strength: float = 0.3
    blur_sigma: float = 1.5
    seed: int = 0


@dataclass
class BatchPair:
    """One training batch.

    ``labeled_image`` is ``(B, C, H, W)``, ``labels`` is ``(B, H, W)`` and
    ``unlabeled_image`` is ``(B, C, H, W)`` or None for labeled-only batches.
    """

    labeled_image: torch.Tensor
    labels: torch.Tensor
    unlabeled_image: torch.Tensor | None
