"""Synthetic phantom generation."""

from .phantom import (
    PhantomSample,
    PhantomSetGenerator,
    contrast_gap,
    generate_phantom,
    render_phantom,
    sample_seeds,
    sector_field,
    validate_phantom_spec,
)

__all__ = [
    "PhantomSample",
    "PhantomSetGenerator",
    "contrast_gap",
    "generate_phantom",
    "render_phantom",
    "sample_seeds",
    "sector_field",
    "validate_phantom_spec",
]
