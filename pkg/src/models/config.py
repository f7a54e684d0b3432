"""Training configuration data models."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SketchParams:
    """Parameters of the auxiliary sketch pipeline."""

    canny_low: float = 0.1
    canny_high: float = 0.2
    gaussian_sigma: float = 1.0
    dilation_radius: int = 1


@dataclass(frozen=True)
class SsimParams:
    """Parameters of the windowed SSIM used by the reconstruction loss."""

    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0


@dataclass(frozen=True)
class LossWeights:
    """Weights of the reconstruction and guidance terms in the total loss."""

    alpha: float = 0.01
    beta: float = 0.01


@dataclass(frozen=True)
class TrainConfig:
    """Flat training configuration.

    Every field maps 1:1 to a key in the YAML config file and to a
    ``--field-name`` command-line flag.
    """

    image_size: int = 256
    in_channels: int = 1
    k_fg: int = 4
    widths: tuple[int, ...] = (16, 32, 64, 128)

    alpha: float = 0.01
    beta: float = 0.01
    ema_lambda: float = 0.99
    n_choices: tuple[int, ...] = (2, 3)

    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    lr_schedule: str = "poly"
    max_iters: int = 6000
    batch_size: int = 1
    seed: int = 1337
    device: str = "cpu"

    val_interval: int = 100
    checkpoint_interval: int = 500
    log_interval: int = 10

    canny_low: float = 0.1
    canny_high: float = 0.2
    gaussian_sigma: float = 1.0
    dilation_radius: int = 1

    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03

    # All-S1: teacher max-confidence below this marks a pixel unreliable
    s1_confidence: float = 0.8

    disable_ers: bool = False
    disable_mms: bool = False
    disable_s1: bool = False
    disable_s2: bool = False
    disable_aux_sketch: bool = False
    fixed_n: int | None = None

    @property
    def k_tot(self) -> int:
        """Number of output channels including background."""
        return self.k_fg + 1

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(alpha=self.alpha, beta=self.beta)

    @property
    def sketch_params(self) -> SketchParams:
        return SketchParams(
            canny_low=self.canny_low,
            canny_high=self.canny_high,
            gaussian_sigma=self.gaussian_sigma,
            dilation_radius=self.dilation_radius,
        )

    @property
    def ssim_params(self) -> SsimParams:
        return SsimParams(
            window_size=self.ssim_window,
            sigma=self.ssim_sigma,
            k1=self.ssim_k1,
            k2=self.ssim_k2,
        )
