"""Manifest files for dataset splits and synthesized phantom sets."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import TypedDict

from src.errors import DataError
from src.models.dataset import DatasetIndex, LabeledPair, PhantomSpec

SPLIT_MANIFEST = "split.json"
SYNTH_MANIFEST = "manifest.json"


class PairData(TypedDict):
    """Type definition for a labeled image/mask entry."""

    patient: str
    image: str
    mask: str


class SplitManifestData(TypedDict):
    """Type definition for a serialized dataset split."""

    root: str
    labeled_ratio: float
    seed: int
    labeled_patients: list[str]
    unlabeled_patients: list[str]
    labeled: list[PairData]
    unlabeled: list[str]
    validation: list[PairData]


class SynthEntry(TypedDict):
    """Type definition for one synthesized sample."""

    image: str
    mask: str
    seed: int


class SynthManifestData(TypedDict):
    """Type definition for a synthesized phantom set."""

    spec: dict[str, object]
    count: int
    files: list[SynthEntry]


def _pair(p: LabeledPair) -> PairData:
    return {"patient": p.patient, "image": str(p.image), "mask": str(p.mask)}


def _write_json(path: Path, data: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with path.open("w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
    except OSError as e:
        raise OSError(f"Failed to write manifest {path}: {e}") from e
    except TypeError as e:
        raise TypeError(f"Cannot serialize manifest to JSON: {e}") from e


def write_split_manifest(index: DatasetIndex, path: Path) -> None:
    """Serialize a dataset split so it can be reproduced exactly.

    Raises:
        OSError: If the file cannot be written
    """
    data: SplitManifestData = {
        "root": str(index.root),
        "labeled_ratio": index.labeled_ratio,
        "seed": index.seed,
        "labeled_patients": index.labeled_patients,
        "unlabeled_patients": index.unlabeled_patients,
        "labeled": [_pair(p) for p in index.labeled],
        "unlabeled": [str(p) for p in index.unlabeled],
        "validation": [_pair(p) for p in index.validation],
    }
    _write_json(path, data)


def load_split_manifest(path: Path) -> DatasetIndex:
    """Load a split written by ``write_split_manifest``.

    Raises:
        DataError: If the file is missing or malformed
    """
    try:
        with path.open("r", encoding="utf-8") as f:
            data: SplitManifestData = json.load(f)
        return DatasetIndex(
            root=Path(data["root"]),
            labeled=[
                LabeledPair(patient=p["patient"], image=Path(p["image"]), mask=Path(p["mask"]))
                for p in data["labeled"]
            ],
            unlabeled=[Path(p) for p in data["unlabeled"]],
            validation=[
                LabeledPair(patient=p["patient"], image=Path(p["image"]), mask=Path(p["mask"]))
                for p in data["validation"]
            ],
            labeled_ratio=float(data["labeled_ratio"]),
            seed=int(data["seed"]),
            labeled_patients=list(data["labeled_patients"]),
            unlabeled_patients=list(data["unlabeled_patients"]),
        )
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read split manifest {path}: {e}") from e
    except (KeyError, TypeError) as e:
        raise DataError(f"Malformed split manifest {path}: {e}") from e


def write_synth_manifest(out_dir: Path, spec: PhantomSpec, entries: list[SynthEntry]) -> Path:
    """Write the manifest of a synthesized phantom set and return its path."""
    data: SynthManifestData = {
        "spec": dataclasses.asdict(spec),
        "count": len(entries),
        "files": entries,
    }
    path = out_dir / SYNTH_MANIFEST
    _write_json(path, data)
    return path
