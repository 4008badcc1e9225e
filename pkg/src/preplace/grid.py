"""Placement grid and heatmap containers shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TargetOutOfGrid(ValueError):
    """Requested cell or point falls outside the grid."""


class GridMismatch(ValueError):
    """Two heatmaps with different grids were combined."""


@dataclass(frozen=True)
class GridSpec:
    """n x m placement grid; n cells along x, m along y, square cells."""

    n: int = 5
    m: int = 10
    cell_size: float = 0.08
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("grid needs at least one cell per axis")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")

    @property
    def extent(self) -> tuple[float, float]:
        return (self.n * self.cell_size, self.m * self.cell_size)

    def cell_center(self, cell: tuple[int, int]) -> np.ndarray:
        """(x, y) meters of a cell center; accepts fractional cells."""
        cx, cy = cell
        return np.array(
            [
                self.origin[0] + (cx + 0.5) * self.cell_size,
                self.origin[1] + (cy + 0.5) * self.cell_size,
            ]
        )

    def point_to_cell(self, point) -> tuple[int, int]:
        """Cell containing a table point, clamped to the grid edge."""
        px, py = float(point[0]), float(point[1])
        cx = int(np.floor((px - self.origin[0]) / self.cell_size))
        cy = int(np.floor((py - self.origin[1]) / self.cell_size))
        return (min(max(cx, 0), self.n - 1), min(max(cy, 0), self.m - 1))

    def contains_cell(self, cell) -> bool:
        return 0 <= cell[0] <= self.n - 1 and 0 <= cell[1] <= self.m - 1

    def cells(self):
        for x in range(self.n):
            for y in range(self.m):
                yield (x, y)


@dataclass
class Heatmap:
    """Per-cell placement likelihoods in [0, 1]; values[x, y], shape (n, m)."""

    grid: GridSpec
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros((self.grid.n, self.grid.m))
        else:
            v = np.asarray(self.values, dtype=np.float64)
            if v.shape != (self.grid.n, self.grid.m):
                raise ValueError(
                    f"values shape {v.shape} != grid ({self.grid.n}, {self.grid.m})"
                )
            if not np.all(np.isfinite(v)):
                raise ValueError("heatmap values must be finite")
            if v.min() < 0.0 or v.max() > 1.0:
                raise ValueError("heatmap values must lie in [0, 1]")
            self.values = v

    def peak(self) -> tuple[float, tuple[int, int]]:
        """Max cell value and its cell; ties break to smallest x, then y."""
        flat = int(np.argmax(self.values))  # row-major: smallest x then y wins
        cell = (flat // self.grid.m, flat % self.grid.m)
        return float(self.values[cell]), cell

    def copy(self) -> "Heatmap":
        return Heatmap(self.grid, self.values.copy())
