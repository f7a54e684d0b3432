"""Pipeline variant selection."""

from .ablation import PipelineVariant, ablation_mode

__all__ = ["PipelineVariant", "ablation_mode"]
