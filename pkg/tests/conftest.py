"""Shared fixtures: tiny configs and a small phantom dataset."""

from __future__ import annotations

import io
from pathlib import Path

import pytest
from rich.console import Console

from src.config.settings import validate_config
from src.generators.phantom import PhantomSetGenerator
from src.models.config import TrainConfig
from src.models.dataset import PhantomSpec


@pytest.fixture
def quiet_console() -> Console:
    return Console(file=io.StringIO(), width=120)


@pytest.fixture
def tiny_config() -> TrainConfig:
    """32x32 single-channel images, three U-Net levels, two foreground classes."""
    return validate_config(
        TrainConfig(
            image_size=32,
            k_fg=2,
            widths=(4, 8, 16),
            max_iters=4,
            val_interval=2,
            checkpoint_interval=2,
            log_interval=1,
            seed=3,
        )
    )


@pytest.fixture
def phantom_root(tmp_path: Path, quiet_console: Console) -> Path:
    """Eight 32x32 two-chamber phantoms, one frame per patient."""
    root = tmp_path / "phantoms"
    spec = PhantomSpec(size=32, chambers=2, seed=11)
    _ = PhantomSetGenerator(quiet_console).generate(root, 8, spec)
    return root
