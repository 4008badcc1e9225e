"""Predictive/definitive action arbitration with preemption.

The arbiter owns the prediction memory and the action state for one trial.
Heatmaps arrive only while the object is unplaced; a detection commits the
trial to a definitive goal that no later prediction can change.  An
in-flight predictive motion whose goal is within tolerance of the detected
object is allowed to finish and is then refined to the exact point, which
avoids stop-and-go right above the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, Heatmap
from .memory import MemoryConfig, PredictionMemory

IDLE = "idle"
PREDICTIVE = "predictive"
DEFINITIVE = "definitive"
GRASPED = "grasped"


class ObjectOutOfWorkspace(ValueError):
    """Detected placement point lies outside the reachable table area."""


@dataclass(frozen=True)
class ArbitrationConfig:
    gamma: float = 0.05
    tol_x: int = 1
    tol_y: int = 2
    memory: MemoryConfig = field(default_factory=MemoryConfig)

    def __post_init__(self):
        # values above 1 are allowed: fused peaks never exceed 1, so such a
        # limit disables predictive motion entirely (the reactive baseline)
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.tol_x < 0 or self.tol_y < 0:
            raise ValueError("tolerances must be >= 0")


def within_tolerance(a, b, config: ArbitrationConfig) -> bool:
    """True when two cells differ by at most (tol_x, tol_y) grids."""
    return (
        abs(a[0] - b[0]) <= config.tol_x and abs(a[1] - b[1]) <= config.tol_y
    )


@dataclass(frozen=True)
class Preempt:
    """Cancel the executor's active motion before starting the next one."""

    t: float


@dataclass(frozen=True)
class Motion:
    """Start a motion of the given kind toward a table point."""

    t: float
    kind: str  # predictive | definitive | refinement
    point: tuple[float, float]
    cell: tuple[int, int] | None = None


@dataclass(frozen=True)
class DecisionRecord:
    """One log line per arbiter event, for the harness and the UI."""

    t: float
    event: str
    peak: float | None
    argmax: tuple[int, int] | None
    state_before: str
    state_after: str
    commands: tuple[str, ...]


class Arbiter:
    """Serialized event-loop owner of {memory, action state} for one trial."""

    def __init__(self, grid: GridSpec, config: ArbitrationConfig = ArbitrationConfig()):
        self.grid = grid
        self.config = config
        self.memory = PredictionMemory(grid, config.memory)
        self.state = IDLE
        self.goal_cell: tuple[int, int] | None = None
        self.object_point: tuple[float, float] | None = None
        self.motion_active = False
        self.motion_kind: str | None = None
        self.pending_refinement = False
        self.detected = False
        self.preempt_count = 0
        self.last_predictive_cell: tuple[int, int] | None = None
        self.log: list[DecisionRecord] = []

    # -- event handlers --------------------------------------------------

    def on_heatmap(self, t: float, p: Heatmap) -> list:
        """Fuse the new prediction and launch/redirect predictive motion."""
        before = self.state
        commands: list = []
        peak = None
        cell = None
        if not self.detected and self.state != GRASPED:
            self.memory.push(p)
            peak, cell = self.memory.peak()
            if peak > self.config.gamma:
                if self.state == IDLE:
                    commands = self._start_predictive(t, cell)
                elif self.state == PREDICTIVE and not within_tolerance(
                    cell, self.goal_cell, self.config
                ):
                    if self.motion_active:
                        commands.append(Preempt(t))
                        self.preempt_count += 1
                    commands += self._start_predictive(t, cell)
        self._record(t, "heatmap", peak, cell, before, commands)
        return commands

    def on_object_detected(self, t: float, point) -> list:
        """Commit to the detected placement; preempt only on a stale goal."""
        px, py = float(point[0]), float(point[1])
        lo = self.grid.origin
        hi = (lo[0] + self.grid.extent[0], lo[1] + self.grid.extent[1])
        if not (lo[0] <= px <= hi[0] and lo[1] <= py <= hi[1]):
            raise ObjectOutOfWorkspace(f"({px}, {py}) outside the table grid")
        before = self.state
        commands: list = []
        if not self.detected and self.state != GRASPED:
            self.detected = True
            self.object_point = (px, py)
            obj_cell = self.grid.point_to_cell((px, py))
            if self.state == PREDICTIVE and within_tolerance(
                self.goal_cell, obj_cell, self.config
            ):
                if self.motion_active:
                    # close enough: let the full approach finish, then refine
                    self.pending_refinement = True
                else:
                    commands.append(self._start_motion(t, "refinement", (px, py)))
            else:
                if self.motion_active:
                    commands.append(Preempt(t))
                    self.preempt_count += 1
                commands.append(self._start_motion(t, "definitive", (px, py)))
            self.state = DEFINITIVE
        self._record(t, "object_detected", None, None, before, commands)
        return commands

    def on_motion_finished(self, t: float) -> list:
        """Advance the state machine when the executor completes a motion."""
        before = self.state
        commands: list = []
        if self.motion_active:
            self.motion_active = False
            finished = self.motion_kind
            self.motion_kind = None
            if finished in ("definitive", "refinement"):
                self.state = GRASPED
            elif self.pending_refinement:
                self.pending_refinement = False
                commands.append(
                    self._start_motion(t, "refinement", self.object_point)
                )
        self._record(t, "motion_finished", None, None, before, commands)
        return commands

    # -- internals ---------------------------------------------------------

    def _start_predictive(self, t: float, cell: tuple[int, int]) -> list:
        center = self.grid.cell_center(cell)
        cmd = self._start_motion(t, "predictive", (float(center[0]), float(center[1])), cell)
        self.state = PREDICTIVE
        self.goal_cell = cell
        self.last_predictive_cell = cell
        return [cmd]

    def _start_motion(self, t, kind, point, cell=None) -> Motion:
        self.motion_active = True
        self.motion_kind = kind
        return Motion(t=t, kind=kind, point=(float(point[0]), float(point[1])), cell=cell)

    def _record(self, t, event, peak, argmax, before, commands):
        self.log.append(
            DecisionRecord(
                t=t,
                event=event,
                peak=peak,
                argmax=argmax,
                state_before=before,
                state_after=self.state,
                commands=tuple(type(c).__name__.lower() + ":" + getattr(c, "kind", "")
                               for c in commands),
            )
        )

    def prediction_error(self, target_cell) -> tuple[int, int, float, float] | None:
        """(|dx|, |dy|, euclidean grids, euclidean m) of the last predictive
        goal against the true cell; None when no predictive motion ran."""
        if self.last_predictive_cell is None:
            return None
        dx = abs(self.last_predictive_cell[0] - target_cell[0])
        dy = abs(self.last_predictive_cell[1] - target_cell[1])
        grids = float(np.hypot(dx, dy))
        return dx, dy, grids, grids * self.grid.cell_size
