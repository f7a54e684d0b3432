"""Puzzle mixing layout data model."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class MixLayout:
    """Grid partition and per-position source assignment for puzzle mixing.

    ``assignment[j] == 1`` means grid position ``j`` (row-major) of mixed
    image a takes the labeled patch; mixed image b uses the complement.
    """

    n: int
    row_bounds: tuple[int, ...]
    col_bounds: tuple[int, ...]
    assignment: tuple[int, ...]

    @property
    def height(self) -> int:
        return self.row_bounds[-1]

    @property
    def width(self) -> int:
        return self.col_bounds[-1]

    def patches(self) -> list[tuple[slice, slice, int]]:
        """Return ``(rows, cols, assigned)`` for every grid position in row-major order."""
        cells: list[tuple[slice, slice, int]] = []
        for i in range(self.n):
            for j in range(self.n):
                cells.append(
                    (
                        slice(self.row_bounds[i], self.row_bounds[i + 1]),
                        slice(self.col_bounds[j], self.col_bounds[j + 1]),
                        self.assignment[i * self.n + j],
                    )
                )
        return cells

    def encode(self) -> str:
        """Compact reproducible form, e.g. ``"2:1001"``."""
        return f"{self.n}:" + "".join(str(a) for a in self.assignment)
