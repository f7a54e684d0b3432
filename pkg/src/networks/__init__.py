"""Network definitions."""

from .ema import create_teacher, ema_update
from .unet import DualHeadUNet, NetOutput, argmax_labels, forward_recon, forward_seg

__all__ = [
    "DualHeadUNet",
    "NetOutput",
    "argmax_labels",
    "create_teacher",
    "ema_update",
    "forward_recon",
    "forward_seg",
]
