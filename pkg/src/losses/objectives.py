"""Segmentation, guidance and total training objectives."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F

from src.errors import DivergenceError
from src.models.config import LossWeights

DICE_SMOOTH = 1e-5
_LOG_FLOOR = 1e-12


def cross_entropy(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean pixel cross-entropy of a probability map against integer labels."""
    pred, target = _batched(pred, target)
    return F.nll_loss(torch.log(pred.clamp_min(_LOG_FLOOR)), target)


def dice_loss(pred: torch.Tensor, target: torch.Tensor, smooth: float = DICE_SMOOTH) -> torch.Tensor:
    """Soft Dice loss macro-averaged over all channels, background included."""
    pred, target = _batched(pred, target)
    onehot = F.one_hot(target, num_classes=pred.shape[1]).permute(0, 3, 1, 2).to(pred.dtype)
    dims = (0, 2, 3)
    intersection = (pred * onehot).sum(dim=dims)
    denominator = pred.sum(dim=dims) + onehot.sum(dim=dims)
    dice = (2 * intersection + smooth) / (denominator + smooth)
    return 1.0 - dice.mean()


def seg_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Cross-entropy plus Dice on a ``(B, K, H, W)`` or ``(K, H, W)`` probability map.

    Raises:
        ValueError: If a label is outside ``[0, K)`` or shapes disagree
    """
    return cross_entropy(pred, target) + dice_loss(pred, target)


def guidance_loss(student_lc: torch.Tensor, teacher_mc: torch.Tensor) -> torch.Tensor:
    """Mean squared difference; the teacher side is detached."""
    if student_lc.shape != teacher_mc.shape:
        raise ValueError(
            f"Shape mismatch: {tuple(student_lc.shape)} vs {tuple(teacher_mc.shape)}"
        )
    return F.mse_loss(student_lc, teacher_mc.detach())


def total_loss(
    l_a: torch.Tensor,
    l_b: torch.Tensor,
    l_rec: torch.Tensor,
    l_g: torch.Tensor,
    w: LossWeights,
) -> torch.Tensor:
    """``(l_a + l_b) / 2 + alpha * l_rec + beta * l_g``.

    Raises:
        DivergenceError: If any component is not finite
    """
    components = {"l_a": l_a, "l_b": l_b, "l_rec": l_rec, "l_g": l_g}
    values = {name: float(v.detach()) for name, v in components.items()}
    bad = {name: v for name, v in values.items() if not math.isfinite(v)}
    if bad:
        raise DivergenceError(f"Non-finite loss components: {bad}", snapshot=dict(bad))
    return (l_a + l_b) / 2 + w.alpha * l_rec + w.beta * l_g


def _batched(pred: torch.Tensor, target: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    if pred.dim() == 3:
        pred, target = pred.unsqueeze(0), target.unsqueeze(0)
    if pred.dim() != 4 or target.shape != pred.shape[:1] + pred.shape[2:]:
        raise ValueError(
            f"Prediction {tuple(pred.shape)} and target {tuple(target.shape)} do not align"
        )
    target = target.long()
    if target.numel() and (int(target.min()) < 0 or int(target.max()) >= pred.shape[1]):
        raise ValueError(
            f"Label values must lie in [0, {pred.shape[1]}), got [{int(target.min())}, {int(target.max())}]"
        )
    return pred, target
