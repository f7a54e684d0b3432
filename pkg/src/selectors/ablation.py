"""Pipeline variant selection from ablation switches."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from src.errors import ConfigError
from src.models.config import LossWeights, TrainConfig

UnreliableSource = Literal["error_map", "softmax"]


@dataclass(frozen=True)
class PipelineVariant:
    """Which stages of the training step run, and with what weights."""

    name: str
    reconstruct: bool
    guide: bool
    unreliable_source: UnreliableSource
    aux_sketch: bool
    mixing: bool
    fixed_n: int | None
    weights: LossWeights

    @property
    def reflection(self) -> bool:
        """True when any error reflection stage runs."""
        return self.reconstruct or self.guide


def ablation_mode(cfg: TrainConfig) -> PipelineVariant:
    """Resolve the ablation flags of a config into a pipeline variant.

    Args:
        cfg: Training configuration

    Returns:
        PipelineVariant describing the stages to run

    Raises:
        ConfigError: If the flags contradict each other
    """
    removals = [
        flag
        for flag, active in (
            ("disable_s1", cfg.disable_s1),
            ("disable_s2", cfg.disable_s2),
            ("disable_aux_sketch", cfg.disable_aux_sketch),
        )
        if active
    ]

    if cfg.disable_ers and removals:
        raise ConfigError(
            f"disable_ers already removes error reflection; drop {', '.join(removals)}"
        )
    if len(removals) > 1:
        raise ConfigError(
            f"At most one of disable_s1, disable_s2, disable_aux_sketch may be set, got {', '.join(removals)}"
        )
    if cfg.disable_mms and cfg.fixed_n is not None:
        raise ConfigError("fixed_n requires multi-scale mixing; remove disable_mms or fixed_n")

    reconstruct = not cfg.disable_ers and not cfg.disable_s1
    guide = not cfg.disable_ers and not cfg.disable_s2
    weights = LossWeights(
        alpha=cfg.alpha if reconstruct else 0.0,
        beta=cfg.beta if guide else 0.0,
    )

    return PipelineVariant(
        name=_variant_name(cfg),
        reconstruct=reconstruct,
        guide=guide,
        unreliable_source="error_map" if reconstruct else "softmax",
        aux_sketch=not cfg.disable_aux_sketch,
        mixing=not cfg.disable_mms,
        fixed_n=cfg.fixed_n,
        weights=weights,
    )


def _variant_name(cfg: TrainConfig) -> str:
    if cfg.disable_ers and cfg.disable_mms:
        return "supervised"
    parts: list[str] = []
    if cfg.disable_ers:
        parts.append("no-reflection")
    if cfg.disable_mms:
        parts.append("no-mixing")
    if cfg.disable_s1:
        parts.append("no-reconstruction")
    if cfg.disable_s2:
        parts.append("no-guidance")
    if cfg.disable_aux_sketch:
        parts.append("no-aux-sketch")
    if cfg.fixed_n is not None:
        parts.append(f"n{cfg.fixed_n}")
    return "+".join(parts) if parts else "full"
