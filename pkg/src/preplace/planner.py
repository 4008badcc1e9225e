"""Stochastic trajectory optimization and pick-motion sequencing.

The arm is a Cartesian gantry: the end effector moves along x, y, z with
independent speed limits and a binary gripper.  Planning happens on the
table plane; vertical moves are straight descents.  The optimizer perturbs
interior waypoints with Gaussian noise, weights rollouts by exponentiated
negative cost, and keeps an update only when total cost does not increase,
so the best cost is monotone non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

GRIPPER_OPEN = "open"
GRIPPER_CLOSED = "closed"

PHASE_TRAVERSE = "XYTraverse"
PHASE_PREGRASP = "PreGrasp"
PHASE_GRASP = "Grasp"


class GoalOutOfWorkspace(ValueError):
    """Requested start or goal lies outside the arm's reachable box."""


class GoalInsideZone(ValueError):
    """The goal point is inside a keep-out zone; no plan can end there."""


class NoProgress(RuntimeError):
    """Optimization hit the iteration cap with waypoints still inside a zone.

    Carries the best plan found so far in `.plan`.
    """

    def __init__(self, message: str, plan: "TrajectoryPlan"):
        super().__init__(message)
        self.plan = plan


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned reachable box for the end effector."""

    x: tuple[float, float] = (-0.1, 0.5)
    y: tuple[float, float] = (-0.25, 0.9)
    z: tuple[float, float] = (0.0, 0.4)

    def contains(self, pos) -> bool:
        p = np.asarray(pos, dtype=np.float64)
        return bool(
            self.x[0] <= p[0] <= self.x[1]
            and self.y[0] <= p[1] <= self.y[1]
            and self.z[0] <= p[2] <= self.z[1]
        )


@dataclass(frozen=True)
class ArmState:
    """End-effector pose plus the shared per-axis speed limits (m/s)."""

    x: float
    y: float
    z: float
    gripper: str = GRIPPER_OPEN
    limits: tuple[float, float, float] = (0.25, 0.25, 0.25)

    def __post_init__(self):
        if self.gripper not in (GRIPPER_OPEN, GRIPPER_CLOSED):
            raise ValueError(f"gripper must be open or closed, got {self.gripper!r}")
        if self.z < 0:
            raise ValueError("z must be >= 0")
        if any(l <= 0 for l in self.limits):
            raise ValueError("speed limits must be positive")

    @property
    def pos(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def at(self, pos, gripper: str | None = None) -> "ArmState":
        return replace(
            self,
            x=float(pos[0]),
            y=float(pos[1]),
            z=float(pos[2]),
            gripper=self.gripper if gripper is None else gripper,
        )


@dataclass(frozen=True)
class KeepOutZone:
    """Circular region on the table plane the x-y path should avoid."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")

    def distance(self, point) -> float:
        p = np.asarray(point, dtype=np.float64)[:2]
        return float(np.hypot(p[0] - self.center[0], p[1] - self.center[1]))


@dataclass(frozen=True)
class StompConfig:
    num_waypoints: int = 20
    rollouts: int = 8
    iterations: int = 50
    noise_std: float = 0.02
    smooth_weight: float = 1.0
    obstacle_weight: float = 200.0
    temperature: float = 10.0
    clearance_margin: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.num_waypoints < 3:
            raise ValueError("need at least 3 waypoints")
        if self.rollouts < 2:
            raise ValueError("need at least 2 rollouts")
        if min(self.smooth_weight, self.obstacle_weight, self.noise_std) < 0:
            raise ValueError("weights and noise must be >= 0")


@dataclass(frozen=True)
class PickConfig:
    """Shared heights and home pose for both study modes."""

    travel_z: float = 0.20
    pregrasp_z: float = 0.05
    grasp_z: float = 0.01
    ready: tuple[float, float, float] = (0.2, -0.15, 0.20)
    speed: tuple[float, float, float] = (0.25, 0.25, 0.25)

    def ready_state(self) -> ArmState:
        return ArmState(*self.ready, gripper=GRIPPER_OPEN, limits=self.speed)


@dataclass(frozen=True)
class TrajectoryPlan:
    """Immutable piecewise-linear motion: waypoints plus strict timestamps."""

    waypoints: tuple[ArmState, ...]
    timestamps: tuple[float, ...]
    phase: str

    def __post_init__(self):
        if len(self.waypoints) != len(self.timestamps):
            raise ValueError("one timestamp per waypoint")
        if not self.waypoints:
            raise ValueError("plan needs at least one waypoint")
        ts = np.asarray(self.timestamps)
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def duration(self) -> float:
        return self.timestamps[-1] - self.timestamps[0]

    @property
    def start(self) -> ArmState:
        return self.waypoints[0]

    @property
    def goal(self) -> ArmState:
        return self.waypoints[-1]

    def state_at(self, t: float) -> ArmState:
        """Linear interpolation; clamps before the start and after the end.

        The gripper switches to the final waypoint's setting only when the
        plan completes.
        """
        ts = self.timestamps
        if t <= ts[0]:
            return self.waypoints[0].at(self.waypoints[0].pos, self.waypoints[0].gripper)
        if t >= ts[-1]:
            return self.waypoints[-1]
        k = int(np.searchsorted(ts, t, side="right")) - 1
        a, b = self.waypoints[k], self.waypoints[k + 1]
        frac = (t - ts[k]) / (ts[k + 1] - ts[k])
        pos = a.pos + frac * (b.pos - a.pos)
        return a.at(pos, self.waypoints[0].gripper)


def _timestamps(points: np.ndarray, limits, t0: float = 0.0) -> tuple[float, ...]:
    """Segment durations from per-axis displacement over per-axis limit."""
    lim = np.asarray(limits, dtype=np.float64)
    ts = [t0]
    for a, b in zip(points[:-1], points[1:]):
        dt = float(np.max(np.abs(b - a) / lim))
        ts.append(ts[-1] + max(dt, 1e-9))
    return tuple(ts)


def _plan_from_points(
    points: np.ndarray, template: ArmState, phase: str, final_gripper: str | None = None
) -> TrajectoryPlan:
    states = [template.at(p) for p in points]
    if final_gripper is not None:
        states[-1] = states[-1].at(states[-1].pos, final_gripper)
    return TrajectoryPlan(tuple(states), _timestamps(points, template.limits), phase)


def trajectory_cost(
    plan: TrajectoryPlan, zones: tuple[KeepOutZone, ...] = (), config: StompConfig = StompConfig()
) -> float:
    """Smoothness plus obstacle penalty; zero for a uniform straight line."""
    pts = np.stack([w.pos for w in plan.waypoints])
    return _path_cost(pts[:, :2], zones, config, inflate=0.0)


def _path_cost(xy: np.ndarray, zones, config: StompConfig, inflate: float) -> float:
    cost = 0.0
    if len(xy) >= 3:
        second = xy[2:] - 2.0 * xy[1:-1] + xy[:-2]
        cost += config.smooth_weight * float(np.sum(second * second))
    if zones:
        for z in zones:
            d = np.hypot(xy[:, 0] - z.center[0], xy[:, 1] - z.center[1])
            pen = np.maximum(0.0, (z.radius + inflate) - d)
            cost += config.obstacle_weight * float(np.sum(pen * pen))
    return cost


def stomp_plan(
    start: ArmState,
    goal: ArmState,
    zones: tuple[KeepOutZone, ...] = (),
    config: StompConfig = StompConfig(),
    workspace: Workspace = Workspace(),
    phase: str = PHASE_TRAVERSE,
    cost_trace: list | None = None,
) -> TrajectoryPlan:
    """Optimize an x-y path from start to goal around the keep-out zones.

    Endpoints stay pinned; only interior waypoints move.  The height of
    the whole path is the start height (traversal happens at one z).
    `cost_trace`, when given, collects the accepted cost after every
    iteration.
    """
    if not workspace.contains(start.pos):
        raise GoalOutOfWorkspace(f"start {start.pos} outside workspace")
    if not workspace.contains(goal.pos):
        raise GoalOutOfWorkspace(f"goal {goal.pos} outside workspace")
    for z in zones:
        if z.distance((goal.x, goal.y)) < z.radius:
            raise GoalInsideZone(f"goal inside zone at {z.center}")

    if (
        abs(start.x - goal.x) < 1e-12
        and abs(start.y - goal.y) < 1e-12
        and abs(start.z - goal.z) < 1e-12
    ):
        return TrajectoryPlan((start,), (0.0,), phase)

    n = config.num_waypoints
    xy = np.linspace([start.x, start.y], [goal.x, goal.y], n)
    # optimize against slightly fatter zones so the returned path clears
    # the true radius with margin to spare
    inflate = config.clearance_margin
    rng = np.random.default_rng(config.seed)
    cost = _path_cost(xy, zones, config, inflate)
    if zones:
        # without zones the uniform straight line is the smoothness
        # optimum and no perturbation can be accepted, so skip the loop
        for _ in range(config.iterations):
            noises = rng.normal(0.0, config.noise_std, size=(config.rollouts, n - 2, 2))
            costs = np.empty(config.rollouts)
            for k in range(config.rollouts):
                cand = xy.copy()
                cand[1:-1] += noises[k]
                costs[k] = _path_cost(cand, zones, config, inflate)
            span = costs.max() - costs.min()
            if span <= 1e-15:
                weights = np.full(config.rollouts, 1.0 / config.rollouts)
            else:
                w = np.exp(-config.temperature * (costs - costs.min()) / span)
                weights = w / w.sum()
            cand = xy.copy()
            cand[1:-1] += np.einsum("k,kij->ij", weights, noises)
            cand_cost = _path_cost(cand, zones, config, inflate)
            if cand_cost <= cost:
                xy, cost = cand, cand_cost
            if cost_trace is not None:
                cost_trace.append(cost)
    points = np.column_stack([xy, np.full(n, start.z)])
    plan = _plan_from_points(points, start, phase)
    for z in zones:
        clear = min(z.distance(p[:2]) for p in points)
        if clear < z.radius:
            raise NoProgress(
                f"waypoint {clear:.4f} m from zone center, radius {z.radius}", plan
            )
    return plan


def plan_pick_sequence(
    current: ArmState,
    target,
    zones: tuple[KeepOutZone, ...] = (),
    config: StompConfig = StompConfig(),
    pick: PickConfig = PickConfig(),
    workspace: Workspace = Workspace(),
    grasp: bool = True,
) -> list[TrajectoryPlan]:
    """Three-phase pick at a table point: traverse, descend, grasp.

    With grasp=False only the first two phases are returned (the approach
    used for predictive motions, which must not close on thin air).
    """
    tx, ty = float(target[0]), float(target[1])
    if not workspace.contains((tx, ty, pick.grasp_z)):
        raise GoalOutOfWorkspace(f"target ({tx}, {ty}) outside workspace")
    travel_start = current.at((current.x, current.y, pick.travel_z))
    above = current.at((tx, ty, pick.travel_z))
    traverse = stomp_plan(travel_start, above, zones, config, workspace, PHASE_TRAVERSE)
    if abs(current.z - pick.travel_z) > 1e-12:
        # fold the lift to travel height into the traversal plan so the
        # sequence is always exactly three phases
        pts = np.vstack([current.pos[None, :], [w.pos for w in traverse.waypoints]])
        traverse = _plan_from_points(pts, current, PHASE_TRAVERSE)
    plans = [traverse]
    pre = np.array([tx, ty, pick.pregrasp_z])
    plans.append(_plan_from_points(np.stack([above.pos, pre]), current, PHASE_PREGRASP))
    if grasp:
        low = np.array([tx, ty, pick.grasp_z])
        plans.append(
            _plan_from_points(
                np.stack([pre, low]), current, PHASE_GRASP, final_gripper=GRIPPER_CLOSED
            )
        )
    return plans


def plan_refinement(
    current: ArmState,
    target,
    pick: PickConfig = PickConfig(),
    workspace: Workspace = Workspace(),
) -> list[TrajectoryPlan]:
    """Close a small gap from a finished predictive approach: slide at
    pre-grasp height to the exact point, then descend and grasp."""
    tx, ty = float(target[0]), float(target[1])
    if not workspace.contains((tx, ty, pick.grasp_z)):
        raise GoalOutOfWorkspace(f"target ({tx}, {ty}) outside workspace")
    pre = np.array([tx, ty, pick.pregrasp_z])
    plans = []
    if abs(current.x - tx) > 1e-12 or abs(current.y - ty) > 1e-12 or abs(
        current.z - pick.pregrasp_z
    ) > 1e-12:
        plans.append(
            _plan_from_points(np.stack([current.pos, pre]), current, PHASE_PREGRASP)
        )
    low = np.array([tx, ty, pick.grasp_z])
    plans.append(
        _plan_from_points(
            np.stack([pre, low]), current, PHASE_GRASP, final_gripper=GRIPPER_CLOSED
        )
    )
    return plans
