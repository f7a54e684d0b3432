"""Differentiable SSIM reconstruction loss."""

from __future__ import annotations

import torch
from torchmetrics.functional import structural_similarity_index_measure

from src.models.config import SsimParams


def ssim_index(x: torch.Tensor, y: torch.Tensor, p: SsimParams) -> torch.Tensor:
    """Mean SSIM between two ``(C, H, W)`` or ``(B, C, H, W)`` image tensors.

    Gaussian-windowed local statistics, computed per channel and averaged.
    """
    if x.shape != y.shape:
        raise ValueError(f"Shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    if p.window_size < 3 or p.window_size % 2 == 0:
        raise ValueError(f"SSIM window must be odd and >= 3, got {p.window_size}")
    if p.k1 <= 0 or p.k2 <= 0:
        raise ValueError(f"SSIM constants must be > 0, got k1={p.k1}, k2={p.k2}")
    if min(x.shape[-2:]) < p.window_size:
        raise ValueError(
            f"Image {tuple(x.shape[-2:])} is smaller than the SSIM window {p.window_size}"
        )

    if x.dim() == 3:
        x, y = x.unsqueeze(0), y.unsqueeze(0)
    value = structural_similarity_index_measure(
        x,
        y,
        gaussian_kernel=True,
        sigma=p.sigma,
        kernel_size=p.window_size,
        data_range=p.dynamic_range,
        k1=p.k1,
        k2=p.k2,
    )
    assert isinstance(value, torch.Tensor)
    return value


def ssim_loss(proxy: torch.Tensor, target: torch.Tensor, p: SsimParams | None = None) -> torch.Tensor:
    """``1 - SSIM(proxy, target)``; the target receives no gradient."""
    return 1.0 - ssim_index(proxy, target.detach(), p or SsimParams())
