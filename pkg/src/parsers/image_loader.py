"""Raster image and mask loading utilities."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from PIL import Image, UnidentifiedImageError

from src.errors import DataError

# Supported lossless raster extensions
SUPPORTED_IMAGE_EXTENSIONS = {".png", ".bmp", ".tif", ".tiff"}


def collect_image_files(folder_path: Path) -> list[Path]:
    """Collect all raster files from a folder, sorted by name.

    Args:
        folder_path: Path to the folder to scan

    Returns:
        list[Path]: Image file paths; empty if the folder is missing
    """
    if not folder_path.is_dir():
        return []

    image_files = [
        file_path
        for file_path in folder_path.iterdir()
        if file_path.is_file() and file_path.suffix.lower() in SUPPORTED_IMAGE_EXTENSIONS
    ]
    image_files.sort(key=lambda x: x.name.lower())
    return image_files


def _open_raster(path: Path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError as e:
        raise DataError(f"File not found: {path}") from e
    except (UnidentifiedImageError, OSError) as e:
        raise DataError(f"Corrupt or unreadable raster {path}: {e}") from e
    return img


def _to_unit_range(img: Image.Image) -> NDArray[np.float32]:
    """Pixel data as ``(C, H, W)`` float32 in [0, 1]."""
    if img.mode == "P":
        img = img.convert("RGB")
    elif img.mode == "LA":
        img = img.convert("L")
    elif img.mode == "RGBA":
        img = img.convert("RGB")

    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        data = arr.astype(np.float32) / 255.0
    elif arr.dtype == np.bool_:
        data = arr.astype(np.float32)
    elif np.issubdtype(arr.dtype, np.integer):
        data = np.clip(arr.astype(np.float32) / 65535.0, 0.0, 1.0)
    else:
        data = np.clip(arr.astype(np.float32), 0.0, 1.0)

    if data.ndim == 2:
        data = data[None]
    else:
        data = np.moveaxis(data, -1, 0)
    return np.ascontiguousarray(data)


def load_image(path: Path, size: int, channels: int = 1) -> NDArray[np.float32]:
    """Load a grayscale/RGB raster as a ``(channels, size, size)`` image in [0, 1].

    8-bit rasters are divided by 255, 16-bit rasters by 65535. Resizing is
    bilinear. Channel counts are matched by luminance averaging or replication.

    Raises:
        DataError: If the file is missing or corrupt
    """
    data = _to_unit_range(_open_raster(path))

    if data.shape[0] != channels:
        if channels == 1:
            data = data.mean(axis=0, keepdims=True)
        elif data.shape[0] == 1:
            data = np.repeat(data, channels, axis=0)
        else:
            raise DataError(f"{path} has {data.shape[0]} channels, expected {channels}")

    if data.shape[1:] != (size, size):
        data = np.stack(
            [
                np.asarray(
                    Image.fromarray(channel).resize(
                        (size, size), Image.Resampling.BILINEAR
                    )
                )
                for channel in data
            ]
        )
    return np.clip(data, 0.0, 1.0).astype(np.float32)


def load_mask(path: Path, size: int, k_fg: int) -> NDArray[np.int64]:
    """Load an integer-indexed mask resized with nearest-neighbour interpolation.

    Raises:
        DataError: If the file is corrupt, multi-channel or holds classes above ``k_fg``
    """
    img = _open_raster(path)
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise DataError(f"Mask {path} must be single-channel, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer) and arr.dtype != np.bool_:
        raise DataError(f"Mask {path} must hold integer class indices, got {arr.dtype}")

    mask = arr.astype(np.int64)
    if mask.min() < 0 or mask.max() > k_fg:
        raise DataError(f"Mask {path} has classes outside [0, {k_fg}]: max {mask.max()}")

    if mask.shape != (size, size):
        resized = Image.fromarray(mask.astype(np.int32)).resize(
            (size, size), Image.Resampling.NEAREST
        )
        mask = np.asarray(resized).astype(np.int64)
    return mask


def save_image(path: Path, image: NDArray[np.floating]) -> None:
    """Write a ``(C, H, W)`` [0, 1] image as an 8-bit grayscale or RGB PNG."""
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if data.shape[0] == 1:
        out = Image.fromarray(data[0])
    elif data.shape[0] == 3:
        out = Image.fromarray(np.ascontiguousarray(np.moveaxis(data, 0, -1)))
    else:
        raise ValueError(f"Cannot write a {data.shape[0]}-channel image as PNG")
    path.parent.mkdir(parents=True, exist_ok=True)
    out.save(path)


def save_mask(path: Path, mask: NDArray[np.integer]) -> None:
    """Write an ``(H, W)`` label mask as an indexed 8-bit PNG."""
    if mask.min() < 0 or mask.max() > 255:
        raise ValueError("Mask classes must fit in 8 bits")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask.astype(np.uint8)).save(path)


# Per-class overlay colours; class 0 is left untinted
OVERLAY_PALETTE = np.array(
    [
        [0, 0, 0],
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [255, 225, 25],
        [145, 30, 180],
        [70, 240, 240],
        [245, 130, 48],
    ],
    dtype=np.float32,
) / 255.0


def render_overlay(
    image: NDArray[np.floating], mask: NDArray[np.integer], opacity: float = 0.5
) -> NDArray[np.float32]:
    """Blend class colours over a ``(C, H, W)`` image; returns a ``(3, H, W)`` RGB image."""
    if image.shape[1:] != mask.shape:
        raise ValueError(f"Image {image.shape} and mask {mask.shape} are not aligned")
    gray = np.asarray(image, dtype=np.float32).mean(axis=0)
    rgb = np.repeat(gray[None], 3, axis=0)
    colours = OVERLAY_PALETTE[np.asarray(mask) % len(OVERLAY_PALETTE)].transpose(2, 0, 1)
    tinted = (1.0 - opacity) * rgb + opacity * colours
    return np.where(mask[None] > 0, tinted, rgb).astype(np.float32)


def load_sample(
    image_path: Path,
    mask_path: Path | None,
    size: int,
    channels: int = 1,
    k_fg: int = 1,
) -> tuple[NDArray[np.float32], NDArray[np.int64] | None]:
    """Load an image and, when a mask path is given, its label mask at ``size``.

    Raises:
        DataError: If either file is corrupt or the mask holds classes above ``k_fg``
    """
    image = load_image(image_path, size, channels)
    mask = load_mask(mask_path, size, k_fg) if mask_path is not None else None
    return image, mask
