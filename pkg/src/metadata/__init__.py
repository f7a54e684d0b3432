"""Persistence of checkpoints and manifests."""

from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, restore_module, save_checkpoint
from .manifest import load_split_manifest, write_split_manifest, write_synth_manifest

__all__ = [
    "CHECKPOINT_VERSION",
    "load_checkpoint",
    "load_split_manifest",
    "restore_module",
    "save_checkpoint",
    "write_split_manifest",
    "write_synth_manifest",
]
