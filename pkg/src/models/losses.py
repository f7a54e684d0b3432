"""Loss component record."""

from __future__ import annotations

from dataclasses import dataclass

from src.models.config import LossWeights


@dataclass(frozen=True)
class LossValues:
    """Scalar loss components reported for one training iteration."""

    l_a: float
    l_b: float
    l_rec: float
    l_g: float
    l_all: float

    @classmethod
    def assemble(
        cls, l_a: float, l_b: float, l_rec: float, l_g: float, weights: LossWeights
    ) -> LossValues:
        """Build the record with ``l_all`` recomputed from the other components.

        Args:
            l_a: Segmentation loss on mixed image a
            l_b: Segmentation loss on mixed image b
            l_rec: Reconstruction (SSIM) loss
            l_g: Guidance loss
            weights: Effective alpha/beta for this iteration

        Returns:
            LossValues whose ``l_all`` equals the weighted sum exactly
        """
        l_all = (l_a + l_b) / 2 + weights.alpha * l_rec + weights.beta * l_g
        return cls(l_a=l_a, l_b=l_b, l_rec=l_rec, l_g=l_g, l_all=l_all)

    def as_row(self) -> dict[str, float]:
        return {
            "l_a": self.l_a,
            "l_b": self.l_b,
            "l_rec": self.l_rec,
            "l_g": self.l_g,
            "l_all": self.l_all,
        }
