"""Short-horizon fusion of streaming heatmap predictions.

Keeps the most recent predictions and blends them with geometrically
decaying weights, newest first:

    fused(x, y) = (1/h) * sum_i p_i(x, y) * (1 - epsilon)^i

The divisor is always the configured horizon h, so a freshly reset memory
produces deliberately small fused confidences until history accumulates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import GridMismatch, GridSpec, Heatmap


@dataclass(frozen=True)
class MemoryConfig:
    history_len: int = 10
    epsilon: float = 0.2

    def __post_init__(self):
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")


class PredictionMemory:
    """Ring buffer of heatmaps with decay-weighted fusion."""

    def __init__(self, grid: GridSpec, config: MemoryConfig = MemoryConfig()):
        self.grid = grid
        self.config = config
        self._buf: deque[np.ndarray] = deque(maxlen=config.history_len)
        weights = (1.0 - config.epsilon) ** np.arange(config.history_len)
        self._weights = weights / config.history_len

    def __len__(self) -> int:
        return len(self._buf)

    def reset(self) -> None:
        self._buf.clear()

    def push(self, heatmap: Heatmap) -> None:
        if heatmap.grid != self.grid:
            raise GridMismatch(
                f"heatmap grid {heatmap.grid} vs memory grid {self.grid}"
            )
        self._buf.appendleft(heatmap.values)

    def weighted(self) -> Heatmap:
        """Fused heatmap over everything currently held (zeros when empty)."""
        fused = np.zeros((self.grid.n, self.grid.m))
        for w, values in zip(self._weights, self._buf):
            fused += w * values
        return Heatmap(self.grid, fused)

    def peak(self) -> tuple[float, tuple[int, int]]:
        """(value, cell) of the fused maximum; ties pick the smallest cell."""
        return self.weighted().peak()
