"""Offline accuracy metrics for a trained predictor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..grid import GridSpec
from .network import IntentModel
from .train import TrainingSequence


@dataclass(frozen=True)
class TrajectoryEval:
    target_cell: tuple[int, int]
    steps: int
    decision_step: int
    decided: bool  # peak confidence actually crossed the threshold
    decision_dx: int
    decision_dy: int
    decision_error_grids: float
    decision_error_m: float
    final_quarter_top1: float
    final_dx: int
    final_dy: int
    final_error_grids: float


@dataclass(frozen=True)
class EvalReport:
    gamma: float
    trajectories: list[TrajectoryEval]

    @property
    def mean_decision_error_grids(self) -> float:
        return float(np.mean([t.decision_error_grids for t in self.trajectories]))

    @property
    def mean_decision_error_m(self) -> float:
        return float(np.mean([t.decision_error_m for t in self.trajectories]))

    @property
    def mean_final_quarter_top1(self) -> float:
        return float(np.mean([t.final_quarter_top1 for t in self.trajectories]))

    @property
    def mean_abs_dx(self) -> float:
        return float(np.mean([abs(t.decision_dx) for t in self.trajectories]))

    @property
    def mean_abs_dy(self) -> float:
        return float(np.mean([abs(t.decision_dy) for t in self.trajectories]))

    def summary(self) -> dict:
        return {
            "gamma": self.gamma,
            "trajectories": len(self.trajectories),
            "mean_decision_error_grids": self.mean_decision_error_grids,
            "mean_decision_error_m": self.mean_decision_error_m,
            "mean_abs_dx": self.mean_abs_dx,
            "mean_abs_dy": self.mean_abs_dy,
            "mean_final_quarter_top1": self.mean_final_quarter_top1,
        }


def _cell_error(grid: GridSpec, cell, target):
    dx = cell[0] - target[0]
    dy = cell[1] - target[1]
    grids = float(np.hypot(dx, dy))
    return dx, dy, grids, grids * grid.cell_size


def evaluate(
    model: IntentModel,
    dataset: Sequence[TrainingSequence],
    gamma: float = 0.5,
) -> EvalReport:
    """Argmax-cell accuracy per trajectory.

    The decision step is the first frame whose peak confidence exceeds
    gamma (the last frame when no peak ever does, reported decided=False).
    final_quarter_top1 is the fraction of frames in the last quarter of the
    trajectory whose argmax cell equals the target cell.
    """
    if not dataset:
        raise ValueError("evaluation needs at least one trajectory")
    results = []
    for seq in dataset:
        t_len = seq.inputs.shape[0]
        hidden = None
        peaks: list[tuple[float, tuple[int, int]]] = []
        for t in range(t_len):
            hm, hidden = model.forward(seq.inputs[t], hidden)
            peaks.append(hm.peak())
        decision_step = t_len - 1
        decided = False
        for t, (value, _) in enumerate(peaks):
            if value > gamma:
                decision_step = t
                decided = True
                break
        dx, dy, grids, meters = _cell_error(
            model.grid, peaks[decision_step][1], seq.target_cell
        )
        fdx, fdy, fgrids, _ = _cell_error(model.grid, peaks[-1][1], seq.target_cell)
        q_start = t_len - max(1, t_len // 4)
        hits = sum(
            1 for t in range(q_start, t_len) if peaks[t][1] == seq.target_cell
        )
        results.append(
            TrajectoryEval(
                target_cell=seq.target_cell,
                steps=t_len,
                decision_step=decision_step,
                decided=decided,
                decision_dx=dx,
                decision_dy=dy,
                decision_error_grids=grids,
                decision_error_m=meters,
                final_quarter_top1=hits / (t_len - q_start),
                final_dx=fdx,
                final_dy=fdy,
                final_error_grids=fgrids,
            )
        )
    return EvalReport(gamma=gamma, trajectories=results)
