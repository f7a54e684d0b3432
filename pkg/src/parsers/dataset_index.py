"""Dataset root scanning and patient-level labeled/unlabeled split."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from src.errors import DataError
from src.models.dataset import DatasetIndex, LabeledPair
from src.parsers.image_loader import collect_image_files


def patient_id(image_path: Path) -> str:
    """Patient id of a ``<patient>_<frame>`` file name; the whole stem if no frame suffix."""
    stem = image_path.stem
    return stem.rsplit("_", 1)[0] if "_" in stem else stem


def labeled_patient_count(num_patients: int, labeled_ratio: float) -> int:
    """Nearest whole number of patients for a ratio, at least one."""
    return min(num_patients, max(1, math.floor(num_patients * labeled_ratio + 0.5)))


def index_dataset(root: Path, labeled_ratio: float, seed: int) -> DatasetIndex:
    """Scan ``root/images`` and ``root/masks`` and split patients deterministically.

    Unlabeled patients keep their masks, if any, as the validation set.

    Args:
        root: Dataset root with ``images/`` and ``masks/`` subtrees
        labeled_ratio: Fraction of patients to label, in (0, 1]
        seed: Split seed

    Returns:
        DatasetIndex with disjoint patient-level sides

    Raises:
        DataError: If the layout is wrong, there are no patients, or a labeled
            image has no mask
    """
    if not 0.0 < labeled_ratio <= 1.0:
        raise DataError(f"labeled_ratio must lie in (0, 1], got {labeled_ratio}")

    images_dir = root / "images"
    masks_dir = root / "masks"
    if not images_dir.is_dir():
        raise DataError(f"Dataset root {root} has no images/ directory")

    by_patient: dict[str, list[Path]] = defaultdict(list)
    for image_path in collect_image_files(images_dir):
        by_patient[patient_id(image_path)].append(image_path)
    if not by_patient:
        raise DataError(f"No patients found under {images_dir}")

    patients = sorted(by_patient)
    order = np.random.default_rng(seed).permutation(len(patients))
    shuffled = [patients[i] for i in order]
    count = labeled_patient_count(len(patients), labeled_ratio)
    labeled_patients = sorted(shuffled[:count])
    unlabeled_patients = sorted(shuffled[count:])

    masks = {p.name: p for p in collect_image_files(masks_dir)}

    labeled: list[LabeledPair] = []
    for patient in labeled_patients:
        for image_path in by_patient[patient]:
            mask_path = masks.get(image_path.name)
            if mask_path is None:
                raise DataError(f"Labeled image {image_path} has no mask in {masks_dir}")
            labeled.append(LabeledPair(patient=patient, image=image_path, mask=mask_path))

    unlabeled: list[Path] = []
    validation: list[LabeledPair] = []
    for patient in unlabeled_patients:
        for image_path in by_patient[patient]:
            unlabeled.append(image_path)
            mask_path = masks.get(image_path.name)
            if mask_path is not None:
                validation.append(LabeledPair(patient=patient, image=image_path, mask=mask_path))

    return DatasetIndex(
        root=root,
        labeled=labeled,
        unlabeled=unlabeled,
        validation=validation,
        labeled_ratio=labeled_ratio,
        seed=seed,
        labeled_patients=labeled_patients,
        unlabeled_patients=unlabeled_patients,
    )
