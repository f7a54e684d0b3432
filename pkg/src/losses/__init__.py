"""Training objectives."""

from .objectives import cross_entropy, dice_loss, guidance_loss, seg_loss, total_loss
from .ssim import ssim_index, ssim_loss

__all__ = [
    "cross_entropy",
    "dice_loss",
    "guidance_loss",
    "seg_loss",
    "ssim_index",
    "ssim_loss",
    "total_loss",
]
