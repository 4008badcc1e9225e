"""Training labels: smoothed Gaussian bumps ramped by a confidence weight.

A label heatmap is a 2D Gaussian sampled at the integer grid cells,
rescaled so its maximum is 1, then multiplied by a time-ramped confidence
so the model is free to be unsure early in a trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grid import GridSpec, Heatmap, TargetOutOfGrid


@dataclass(frozen=True)
class LabelParams:
    """Gaussian stddevs in grid units plus the confidence-curve constant."""

    s_x: float = 1.0
    s_y: float = 1.0
    steepness: float = 5.0

    def __post_init__(self):
        if self.s_x <= 0 or self.s_y <= 0:
            raise ValueError("label stddevs must be positive")


def confidence_weight(t: float, total: float, steepness: float = 5.0) -> float:
    """Time-ramped confidence 1 - exp(-steepness * t / total).

    Zero at the first step, approaching 1 - e^-steepness at the last;
    strictly increasing in t.
    """
    if total < 1:
        raise ValueError("trajectory length must be >= 1")
    if t < 0 or t > total:
        raise ValueError(f"step {t} outside [0, {total}]")
    return 1.0 - math.exp(-steepness * t / total)


def make_label(
    target: tuple[float, float],
    grid: GridSpec,
    params: LabelParams,
    t: float,
    total: float,
) -> Heatmap:
    """Smoothed, confidence-scaled label heatmap for a placement target.

    The target may be fractional; the sampled maximum over the grid is
    normalized to 1 before the confidence scale, so the peak cell equals
    confidence_weight(t, total) exactly.
    """
    m_x, m_y = float(target[0]), float(target[1])
    if not (0.0 <= m_x <= grid.n - 1 and 0.0 <= m_y <= grid.m - 1):
        raise TargetOutOfGrid(f"target {target} outside {grid.n}x{grid.m} grid")

    xs = np.arange(grid.n, dtype=np.float64)
    ys = np.arange(grid.m, dtype=np.float64)
    gx = np.exp(-((xs - m_x) ** 2) / (2.0 * params.s_x**2))
    gy = np.exp(-((ys - m_y) ** 2) / (2.0 * params.s_y**2))
    values = np.outer(gx, gy)  # the 1/(2*pi*s_x*s_y) factor cancels below
    values /= values.max()
    values *= confidence_weight(t, total, params.steepness)
    return Heatmap(grid, values)
