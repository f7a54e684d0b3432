"""Auxiliary sketch extraction for the reconstruction reflection step.

Images are channel-first ``(C, H, W)`` float arrays in [0, 1]; masks are
``(H, W)`` arrays. All functions are pure.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage
from skimage.feature import canny

from src.models.config import SketchParams


def canny_edges(img: NDArray[np.floating], p: SketchParams) -> NDArray[np.uint8]:
    """Binary Canny edge map of an image.

    Multi-channel images are reduced to luminance by the channel mean first.

    Args:
        img: ``(C, H, W)`` image in [0, 1]
        p: Sketch parameters (thresholds apply to the Sobel gradient magnitude)

    Returns:
        ``(H, W)`` uint8 mask with 1 on edge ridges

    Raises:
        ValueError: If the thresholds are degenerate or the image is malformed
    """
    if not 0 <= p.canny_low < p.canny_high:
        raise ValueError(
            f"Canny thresholds need 0 <= low < high, got {p.canny_low}, {p.canny_high}"
        )
    if img.ndim != 3 or img.shape[1] < 2 or img.shape[2] < 2:
        raise ValueError(f"Expected a (C, H, W) image with H, W >= 2, got shape {img.shape}")

    luminance = np.asarray(img, dtype=np.float64).mean(axis=0)
    edges = canny(
        luminance,
        sigma=p.gaussian_sigma,
        low_threshold=p.canny_low,
        high_threshold=p.canny_high,
        mode="nearest",
    )
    return edges.astype(np.uint8)


def mask_boundary(mask: NDArray[np.integer]) -> NDArray[np.uint8]:
    """Class-transition boundary of a label mask.

    A foreground pixel is on the boundary when one of its 4-neighbours holds
    a different class. Background pixels are never marked, so a square gives
    its own outer ring and two touching classes give both sides of the shared
    edge. The image border is not a transition.
    """
    if mask.ndim != 2:
        raise ValueError(f"Expected an (H, W) mask, got shape {mask.shape}")

    changed = np.zeros(mask.shape, dtype=bool)
    vertical = mask[1:, :] != mask[:-1, :]
    horizontal = mask[:, 1:] != mask[:, :-1]
    changed[1:, :] |= vertical
    changed[:-1, :] |= vertical
    changed[:, 1:] |= horizontal
    changed[:, :-1] |= horizontal
    return (changed & (mask != 0)).astype(np.uint8)


def dilate(mask: NDArray[np.integer], radius: int) -> NDArray[np.uint8]:
    """Binary dilation with a ``(2r+1) x (2r+1)`` square, clipped at the borders."""
    if radius < 1:
        raise ValueError(f"Dilation radius must be >= 1, got {radius}")
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_dilation(mask.astype(bool), structure=structure).astype(np.uint8)


def merge_sketches(a: NDArray[np.integer], b: NDArray[np.integer]) -> NDArray[np.uint8]:
    """Saturating union of two binary sketches."""
    if a.shape != b.shape:
        raise ValueError(f"Sketch shapes differ: {a.shape} vs {b.shape}")
    return np.logical_or(a, b).astype(np.uint8)


def build_reflection_input(
    img: NDArray[np.floating],
    pl: NDArray[np.integer],
    p: SketchParams,
    aux_sketch: bool = True,
) -> NDArray[np.float32]:
    """Merged sketch fed to the student's reconstruction head.

    Args:
        img: ``(C, H, W)`` unlabeled image
        pl: ``(H, W)`` pseudo-label mask of the same image
        p: Sketch parameters
        aux_sketch: When False only the dilated pseudo-label boundary is used

    Returns:
        ``(C, H, W)`` float32 array with values in {0, 1}
    """
    if img.shape[1:] != pl.shape:
        raise ValueError(f"Image {img.shape} and pseudo-label {pl.shape} are not aligned")

    sketch = dilate(mask_boundary(pl), p.dilation_radius)
    if aux_sketch:
        sketch = merge_sketches(canny_edges(img, p), sketch)
    return np.repeat(sketch[None].astype(np.float32), img.shape[0], axis=0)
