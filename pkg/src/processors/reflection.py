"""Guidance correction: error map, unreliable regions and confidence masks.

Images are ``(..., C, H, W)``; probability maps ``(..., K, H, W)``; error
maps and binary masks ``(..., H, W)``. Leading batch axes are optional.
"""

from __future__ import annotations

import torch


def normalize_min_max(x: torch.Tensor) -> torch.Tensor:
    """Per-channel min-max normalization to [0, 1]; constant channels become 0."""
    lo = x.amin(dim=(-2, -1), keepdim=True)
    hi = x.amax(dim=(-2, -1), keepdim=True)
    span = hi - lo
    safe = torch.where(span > 0, span, torch.ones_like(span))
    return torch.where(span > 0, (x - lo) / safe, torch.zeros_like(x))


def error_map(proxy: torch.Tensor, original: torch.Tensor) -> torch.Tensor:
    """Absolute difference of the normalized proxy and original, averaged over channels."""
    _check_same(proxy, original)
    return (normalize_min_max(proxy) - normalize_min_max(original)).abs().mean(dim=-3)


def unreliable_mask(em: torch.Tensor) -> torch.Tensor:
    """Pixels whose error strictly exceeds half of the map maximum."""
    peak = em.amax(dim=(-2, -1), keepdim=True)
    return (em > peak / 2).to(em.dtype)


def softmax_unreliable_mask(pt: torch.Tensor, threshold: float) -> torch.Tensor:
    """Pixels where the teacher's max-class confidence is below ``threshold``.

    Substitute for the error-map mask when reconstruction is ablated.
    """
    return (pt.amax(dim=-3) < threshold).to(pt.dtype)


def decouple(
    ps: torch.Tensor, pt: torch.Tensor, ur: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Restrict student and teacher predictions to the unreliable region."""
    _check_same(ps, pt)
    _check_mask(ps, ur)
    region = ur.unsqueeze(-3)
    return ps * region, pt * region


def guidance_mask(ps_ur: torch.Tensor, pt_ur: torch.Tensor) -> torch.Tensor:
    """Pixels where the teacher's max-class confidence strictly exceeds the student's."""
    _check_same(ps_ur, pt_ur)
    with torch.no_grad():
        return (pt_ur.amax(dim=-3) > ps_ur.amax(dim=-3)).to(ps_ur.dtype)


def guided_regions(
    ps_ur: torch.Tensor, pt_ur: torch.Tensor, g: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Teacher more-confident and student less-confident regions.

    Returns:
        ``(teacher_mc, student_lc)``
    """
    _check_same(ps_ur, pt_ur)
    _check_mask(ps_ur, g)
    region = g.unsqueeze(-3)
    return pt_ur * region, ps_ur * region


def _check_same(first: torch.Tensor, second: torch.Tensor) -> None:
    if first.shape != second.shape:
        raise ValueError(f"Shape mismatch: {tuple(first.shape)} vs {tuple(second.shape)}")


def _check_mask(maps: torch.Tensor, mask: torch.Tensor) -> None:
    expected = maps.shape[:-3] + maps.shape[-2:]
    if mask.shape != expected:
        raise ValueError(f"Mask shape {tuple(mask.shape)} does not match maps {tuple(maps.shape)}")
