"""U-Net trunk with segmentation and reconstruction heads."""

from __future__ import annotations

from dataclasses import dataclass
from typing import final

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass
class NetOutput:
    """Raw outputs of both heads."""

    seg_logits: torch.Tensor
    recon: torch.Tensor


def _conv_block(in_c: int, out_c: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_c, out_c, 3, padding=1),
        nn.BatchNorm2d(out_c),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_c, out_c, 3, padding=1),
        nn.BatchNorm2d(out_c),
        nn.ReLU(inplace=True),
    )


@final
class DualHeadUNet(nn.Module):
    """U-Net whose trunk is shared by a ``K_tot``-channel segmentation head
    and a ``C``-channel sigmoid reconstruction head.
    """

    def __init__(
        self,
        in_channels: int = 1,
        num_classes: int = 5,
        widths: tuple[int, ...] = (16, 32, 64, 128),
    ) -> None:
        """Initialize the network.

        Args:
            in_channels: Image channel count C (also the reconstruction width)
            num_classes: Segmentation classes including background
            widths: Channel width per resolution level, shallow to deep
        """
        super().__init__()
        if len(widths) < 2:
            raise ValueError(f"U-Net needs at least two levels, got widths {widths}")
        self.in_channels = in_channels
        self.num_classes = num_classes
        self.widths = tuple(widths)

        self.encoders = nn.ModuleList()
        prev = in_channels
        for width in widths:
            self.encoders.append(_conv_block(prev, width))
            prev = width
        self.pool = nn.MaxPool2d(2)

        self.ups = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for deep, shallow in zip(reversed(widths[1:]), reversed(widths[:-1])):
            self.ups.append(nn.ConvTranspose2d(deep, shallow, 2, stride=2))
            self.decoders.append(_conv_block(shallow * 2, shallow))

        self.seg_head = nn.Conv2d(widths[0], num_classes, 1)
        self.recon_head = nn.Conv2d(widths[0], in_channels, 1)

    @property
    def stride(self) -> int:
        return 2 ** (len(self.widths) - 1)

    def trunk(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"Expected (B, {self.in_channels}, H, W) input, got {tuple(x.shape)}"
            )
        if x.shape[-2] % self.stride or x.shape[-1] % self.stride:
            raise ValueError(
                f"Spatial size {tuple(x.shape[-2:])} is not divisible by the U-Net stride {self.stride}"
            )

        skips: list[torch.Tensor] = []
        for i, encoder in enumerate(self.encoders):
            x = encoder(x)
            if i < len(self.encoders) - 1:
                skips.append(x)
                x = self.pool(x)
        for up, decoder, skip in zip(self.ups, self.decoders, reversed(skips)):
            x = decoder(torch.cat([up(x), skip], dim=1))
        return x

    def forward(self, x: torch.Tensor) -> NetOutput:
        features = self.trunk(x)
        return NetOutput(
            seg_logits=self.seg_head(features),
            recon=torch.sigmoid(self.recon_head(features)),
        )

    def segment(self, x: torch.Tensor) -> torch.Tensor:
        """Softmax probability map ``(B, K_tot, H, W)``."""
        return F.softmax(self.seg_head(self.trunk(x)), dim=1)

    def reconstruct(self, x: torch.Tensor) -> torch.Tensor:
        """Proxy image ``(B, C, H, W)`` in [0, 1]."""
        return torch.sigmoid(self.recon_head(self.trunk(x)))


def _as_batch(img: torch.Tensor) -> tuple[torch.Tensor, bool]:
    return (img.unsqueeze(0), True) if img.dim() == 3 else (img, False)


def forward_seg(model: DualHeadUNet, img: torch.Tensor) -> torch.Tensor:
    """Probability map for a ``(C, H, W)`` or ``(B, C, H, W)`` image."""
    batch, squeeze = _as_batch(img)
    probs = model.segment(batch)
    return probs[0] if squeeze else probs


def forward_recon(model: DualHeadUNet, sketch_img: torch.Tensor) -> torch.Tensor:
    """Reconstructed proxy image for a channel-replicated sketch."""
    batch, squeeze = _as_batch(sketch_img)
    recon = model.reconstruct(batch)
    return recon[0] if squeeze else recon


def argmax_labels(p: torch.Tensor) -> torch.Tensor:
    """Per-pixel class argmax over the channel axis; ties go to the lowest index."""
    return torch.argmax(p, dim=-3)
