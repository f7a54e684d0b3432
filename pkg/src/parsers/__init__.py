"""Dataset parsing utilities."""

from .dataset_index import index_dataset, labeled_patient_count, patient_id
from .image_loader import (
    collect_image_files,
    load_image,
    load_mask,
    load_sample,
    render_overlay,
    save_image,
    save_mask,
)

__all__ = [
    "collect_image_files",
    "index_dataset",
    "labeled_patient_count",
    "load_image",
    "load_mask",
    "load_sample",
    "patient_id",
    "render_overlay",
    "save_image",
    "save_mask",
]
