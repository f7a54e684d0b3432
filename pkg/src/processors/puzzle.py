"""Multi-scale puzzle mixing of labeled and unlabeled images.

Every function works on numpy arrays or torch tensors whose last two axes
are ``(H, W)``, so images ``(B, C, H, W)``, masks ``(B, H, W)`` and
probability maps share one implementation.
"""

from __future__ import annotations

import math
from typing import TypeVar

import numpy as np
import torch

from src.models.layout import MixLayout

ArrayT = TypeVar("ArrayT", np.ndarray, torch.Tensor)


def make_layout(h: int, w: int, n: int, rng: np.random.Generator) -> MixLayout:
    """Partition an ``h x w`` image into an ``n x n`` grid and draw an assignment.

    Exactly ``ceil(n^2 / 2)`` positions take the labeled patch in mixed
    image a, chosen uniformly at random.

    Raises:
        ValueError: If ``n`` is not in ``[1, min(h, w)]``
    """
    if not 1 <= n <= min(h, w):
        raise ValueError(f"Grid size {n} does not fit a {h}x{w} image")

    row_bounds = tuple(k * h // n for k in range(n + 1))
    col_bounds = tuple(k * w // n for k in range(n + 1))
    cells = n * n
    chosen = rng.choice(cells, size=math.ceil(cells / 2), replace=False)
    assignment = np.zeros(cells, dtype=np.int64)
    assignment[chosen] = 1
    return MixLayout(
        n=n,
        row_bounds=row_bounds,
        col_bounds=col_bounds,
        assignment=tuple(int(a) for a in assignment),
    )


def identity_layout(h: int, w: int) -> MixLayout:
    """Single-cell layout placing the labeled image in slot a unchanged."""
    return MixLayout(n=1, row_bounds=(0, h), col_bounds=(0, w), assignment=(1,))


def mix(xl: ArrayT, xu: ArrayT, layout: MixLayout) -> tuple[ArrayT, ArrayT]:
    """Exchange patches in place to build two complementary mixed images.

    Image a takes the labeled patch where the assignment is 1 and the
    unlabeled patch elsewhere; image b is the exact complement.
    """
    _check_pair(xl, xu, layout)
    a = _copy(xu)
    b = _copy(xl)
    for rows, cols, assigned in layout.patches():
        if assigned:
            a[..., rows, cols] = xl[..., rows, cols]
            b[..., rows, cols] = xu[..., rows, cols]
    return a, b


def mix_labels(yl: ArrayT, yu: ArrayT, layout: MixLayout) -> tuple[ArrayT, ArrayT]:
    """Mix ground-truth and pseudo-label masks with the layout used for the images."""
    return mix(yl, yu, layout)


def inverse_mix(pa: ArrayT, pb: ArrayT, layout: MixLayout) -> ArrayT:
    """Reassemble the unlabeled-image prediction from the two mixed predictions.

    Where the labeled patch went to a, the unlabeled content sits in b and
    vice versa.
    """
    _check_pair(pa, pb, layout)
    if isinstance(pa, torch.Tensor):
        # torch.where keeps the graph intact for the guidance loss
        select_b = pa.new_zeros(pa.shape[-2:], dtype=torch.bool)
        for rows, cols, assigned in layout.patches():
            if assigned:
                select_b[rows, cols] = True
        return torch.where(select_b, pb, pa)

    out = pa.copy()
    for rows, cols, assigned in layout.patches():
        if assigned:
            out[..., rows, cols] = pb[..., rows, cols]
    return out


def _copy(x: ArrayT) -> ArrayT:
    return x.clone() if isinstance(x, torch.Tensor) else x.copy()


def _check_pair(first: ArrayT, second: ArrayT, layout: MixLayout) -> None:
    if tuple(first.shape) != tuple(second.shape):
        raise ValueError(f"Shape mismatch: {tuple(first.shape)} vs {tuple(second.shape)}")
    if tuple(first.shape[-2:]) != (layout.height, layout.width):
        raise ValueError(
            f"Layout covers {layout.height}x{layout.width} but inputs are {tuple(first.shape[-2:])}"
        )
