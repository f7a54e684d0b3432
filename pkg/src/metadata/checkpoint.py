"""Versioned training checkpoints."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import torch
import torch.nn as nn

from src.errors import CheckpointError

CHECKPOINT_VERSION = 1


def save_checkpoint(path: Path, payload: dict[str, Any]) -> None:
    """Write a checkpoint payload with the current format version.

    Raises:
        CheckpointError: If the file cannot be written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        torch.save({"version": CHECKPOINT_VERSION, **payload}, tmp)
        _ = tmp.replace(path)
    except OSError as e:
        raise CheckpointError(f"Failed to write checkpoint {path}: {e}") from e


def load_checkpoint(path: Path) -> dict[str, Any]:
    """Read a checkpoint and check its version.

    Raises:
        CheckpointError: If the file is missing, unreadable or of another version
    """
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    if not isinstance(payload, dict):
        raise CheckpointError(f"Checkpoint {path} is not a mapping")
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"Checkpoint {path} has version {version}, expected {CHECKPOINT_VERSION}"
        )
    return payload


def restore_module(module: nn.Module, state: dict[str, torch.Tensor], label: str) -> None:
    """Load named tensors into a module, rejecting name or shape mismatches.

    Raises:
        CheckpointError: If the tensors do not match the module exactly
    """
    expected = module.state_dict()
    missing = sorted(set(expected) - set(state))
    unexpected = sorted(set(state) - set(expected))
    if missing or unexpected:
        raise CheckpointError(
            f"{label} tensors do not match: missing {missing[:5]}, unexpected {unexpected[:5]}"
        )
    for name, tensor in state.items():
        if tuple(tensor.shape) != tuple(expected[name].shape):
            raise CheckpointError(
                f"{label} tensor {name} has shape {tuple(tensor.shape)}, expected {tuple(expected[name].shape)}"
            )
    _ = module.load_state_dict(state)
