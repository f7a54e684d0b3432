"""Synthetic echo-like phantom generation.

A phantom is a dark sector-shaped field holding 1 to 4 brighter elliptical
chambers, blurred and corrupted with multiplicative speckle. The mask is the
noise-free chamber rasterization.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import final

import numpy as np
from numpy.typing import NDArray
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn
from scipy import ndimage
from skimage.draw import ellipse

from src.errors import DataError
from src.metadata.manifest import SynthEntry, write_synth_manifest
from src.models.dataset import PhantomSpec
from src.parsers.image_loader import save_image, save_mask

CONE_HALF_ANGLE = math.radians(40.0)
CHAMBER_GAP = 2
MAX_PLACEMENT_TRIES = 200


@dataclass
class PhantomSample:
    """Rendered phantom with its sector field."""

    image: NDArray[np.float32]
    mask: NDArray[np.int64]
    field: NDArray[np.bool_]


def validate_phantom_spec(spec: PhantomSpec) -> None:
    """Raise ValueError if a phantom spec is out of range."""
    if not 1 <= spec.chambers <= 4:
        raise ValueError(f"chambers must lie in [1, 4], got {spec.chambers}")
    if not 0.0 < spec.contrast <= 1.0:
        raise ValueError(f"contrast must lie in (0, 1], got {spec.contrast}")
    if spec.speckle_strength < 0 or spec.blur_sigma < 0:
        raise ValueError("speckle_strength and blur_sigma must be >= 0")
    if spec.size < 16:
        raise ValueError(f"Phantom size must be >= 16, got {spec.size}")


def sector_field(size: int) -> NDArray[np.bool_]:
    """Cone-shaped imaging sector with its apex just above the top centre."""
    apex_r, apex_c = -0.05 * size, (size - 1) / 2
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    dy = rows - apex_r
    dx = cols - apex_c
    radius = np.hypot(dy, dx)
    angle = np.arctan2(np.abs(dx), dy)
    return (radius <= 1.0 * size) & (angle <= CONE_HALF_ANGLE)


def _place_chambers(spec: PhantomSpec, field: NDArray[np.bool_], rng: np.random.Generator) -> NDArray[np.int64]:
    size = spec.size
    mask = np.zeros((size, size), dtype=np.int64)
    # Padding makes the image border count as outside the field
    to_edge = ndimage.distance_transform_edt(np.pad(field, 1))[1:-1, 1:-1]

    for chamber in range(1, spec.chambers + 1):
        for attempt in range(MAX_PLACEMENT_TRIES):
            shrink = 1.0 - 0.5 * attempt / MAX_PLACEMENT_TRIES
            r_radius = max(2.0, rng.uniform(0.09, 0.16) * size * shrink)
            c_radius = max(2.0, rng.uniform(0.09, 0.16) * size * shrink)
            rotation = rng.uniform(-math.pi / 2, math.pi / 2)
            reach = max(r_radius, c_radius)

            if mask.any():
                to_occupied = ndimage.distance_transform_edt(mask == 0)
            else:
                to_occupied = np.full(mask.shape, np.inf)
            candidates = np.flatnonzero((to_edge > reach + 1) & (to_occupied > reach + CHAMBER_GAP))
            if candidates.size == 0:
                continue

            center = int(candidates[rng.integers(candidates.size)])
            rr, cc = ellipse(
                center // size, center % size, r_radius, c_radius, shape=mask.shape, rotation=rotation
            )
            if rr.size == 0:
                continue
            mask[rr, cc] = chamber
            break
        else:
            raise DataError(
                f"Could not place chamber {chamber} of {spec.chambers} after {MAX_PLACEMENT_TRIES} tries"
            )
    return mask


def render_phantom(spec: PhantomSpec) -> PhantomSample:
    """Render a phantom, its mask and its sector field from the spec seed.

    Raises:
        ValueError: If the spec is out of range
        DataError: If the chambers cannot be placed
    """
    validate_phantom_spec(spec)
    rng = np.random.default_rng(spec.seed)
    field = sector_field(spec.size)
    mask = _place_chambers(spec, field, rng)

    tissue = max(0.0, (1.0 - spec.contrast) / 2)
    chamber = min(1.0, tissue + spec.contrast)
    image = np.where(field, tissue, 0.0)
    image[mask > 0] = chamber

    if spec.blur_sigma > 0:
        image = ndimage.gaussian_filter(image, spec.blur_sigma)
    if spec.speckle_strength > 0:
        # Unit-mean gamma speckle with standard deviation speckle_strength
        k = 1.0 / spec.speckle_strength**2
        image = image * rng.gamma(shape=k, scale=1.0 / k, size=image.shape)

    image = np.clip(image, 0.0, 1.0).astype(np.float32)[None]
    return PhantomSample(image=image, mask=mask, field=field)


def generate_phantom(spec: PhantomSpec) -> tuple[NDArray[np.float32], NDArray[np.int64]]:
    """``(image, mask)`` pair for a phantom spec; image is ``(1, H, W)``."""
    sample = render_phantom(spec)
    return sample.image, sample.mask


def contrast_gap(sample: PhantomSample) -> float:
    """Mean chamber intensity minus mean tissue intensity inside the sector.

    The black area outside the sector is not tissue and is left out.
    """
    image = sample.image[0]
    chambers = sample.mask > 0
    tissue = sample.field & ~chambers
    if not chambers.any() or not tissue.any():
        raise ValueError("Phantom needs both chamber and tissue pixels")
    return float(image[chambers].mean()) - float(image[tissue].mean())


def sample_seeds(seed: int, count: int) -> list[int]:
    """Independent per-sample seeds derived from one run seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


@final
class PhantomSetGenerator:
    """Writes phantom datasets in the ``images/`` + ``masks/`` layout."""

    def __init__(self, console: Console | None = None) -> None:
        """Initialize the generator.

        Args:
            console: Rich console instance for output
        """
        self.console = console or Console(stderr=True)

    def generate(
        self,
        out_dir: Path,
        count: int,
        spec: PhantomSpec,
        frames_per_patient: int = 1,
    ) -> Path:
        """Write ``count`` phantom pairs plus a manifest.

        File names are ``p<patient>_<frame>.png``; every sample has its own
        seed derived from ``spec.seed``.

        Returns:
            Path of the written manifest
        """
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        if frames_per_patient < 1:
            raise ValueError(f"frames_per_patient must be >= 1, got {frames_per_patient}")
        validate_phantom_spec(spec)

        entries: list[SynthEntry] = []
        gaps: list[float] = []
        with Progress(
            TextColumn("Synthesizing"),
            BarColumn(),
            MofNCompleteColumn(),
            console=self.console,
        ) as progress:
            task = progress.add_task("synth", total=count)
            for i, sample_seed in enumerate(sample_seeds(spec.seed, count)):
                name = f"p{i // frames_per_patient:04d}_{i % frames_per_patient:02d}.png"
                sample = render_phantom(dataclasses.replace(spec, seed=sample_seed))
                save_image(out_dir / "images" / name, sample.image)
                save_mask(out_dir / "masks" / name, sample.mask)
                gaps.append(contrast_gap(sample))
                entries.append(
                    SynthEntry(image=f"images/{name}", mask=f"masks/{name}", seed=sample_seed)
                )
                progress.advance(task)

        manifest = write_synth_manifest(out_dir, spec, entries)
        self.console.print(
            f"[green]✓[/green] Wrote {count} phantoms to {out_dir} "
            f"(mean contrast gap {np.mean(gaps):.3f}, requested {spec.contrast:.3f})"
        )
        return manifest
