"""Deterministic virtual world for reach-and-place trials.

A synthetic human reaches from a start region to a target cell along a
minimum-jerk curve while their gaze leads the hand toward the target; the
robot executes planned motions under the arbiter's commands.  Everything
runs on a virtual clock at a fixed frame rate, driven only by seeds, so a
trial is a pure function of (trajectory, mode, configs).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .arbitration import (
    GRASPED,
    Arbiter,
    ArbitrationConfig,
    Motion,
    Preempt,
)
from .geometry import (
    FeatureFrame,
    RawFrame,
    TablePlane,
    build_features,
    rotation_about,
    rotation_aligning,
    tilt_head_norm,
)
from .grid import GridSpec, Heatmap, TargetOutOfGrid
from .intent.labels import confidence_weight
from .intent.network import IntentModel
from .planner import (
    ArmState,
    PickConfig,
    StompConfig,
    TrajectoryPlan,
    Workspace,
    plan_pick_sequence,
    plan_refinement,
)

REACTIVE = "reactive"
PREEMPTIVE = "preemptive"
MODES = (REACTIVE, PREEMPTIVE)


class TrialTimeout(RuntimeError):
    """Safety cap: the trial failed to reach a grasp in the allowed time."""


@dataclass(frozen=True)
class SimConfig:
    rate: float = 20.0
    duration_range: tuple[float, float] = (1.5, 3.0)
    hand_start: tuple[float, float, float] = (0.2, 0.95, 0.25)
    hand_start_jitter: float = 0.05
    head_pos: tuple[float, float, float] = (0.2, 1.05, 0.45)
    gaze_lead: float = 0.3
    hand_noise: float = 0.005
    gaze_noise: float = 0.02
    latency: float = 0.1
    place_height: float = 0.02
    timeout: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("frame rate must be positive")
        lo, hi = self.duration_range
        if lo <= 0 or hi < lo:
            raise ValueError("duration range must be positive and ordered")
        if self.latency < 0:
            raise ValueError("detection latency must be >= 0")
        if not 0.0 <= self.gaze_lead <= 1.0:
            raise ValueError("gaze lead fraction must be in [0, 1]")


@dataclass(frozen=True)
class HumanTrajectory:
    frames: tuple[RawFrame, ...]
    target_cell: tuple[int, int]
    target_point: np.ndarray  # (x, y) meters
    release_time: float

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(
            self, "target_point", np.asarray(self.target_point, dtype=np.float64)
        )


def min_jerk(tau: float) -> float:
    """Normalized minimum-jerk position profile on [0, 1]."""
    return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))


def gen_trajectory(
    rng: np.random.Generator,
    grid: GridSpec,
    target_cell: tuple[int, int],
    config: SimConfig = SimConfig(),
) -> HumanTrajectory:
    """Synthesize one seeded reach-and-place toward a grid cell.

    The palm runs a minimum-jerk curve ending exactly on the jittered
    target point (transit noise tapers to zero at both endpoints); the
    head is oriented so the gaze ray hits a point leading the palm toward
    the target by the configured fraction of the remaining path.
    """
    if not grid.contains_cell(target_cell):
        raise TargetOutOfGrid(f"{target_cell} outside {grid.n}x{grid.m}")
    duration = rng.uniform(*config.duration_range)
    steps = max(2, int(round(duration * config.rate)))
    dt = 1.0 / config.rate

    center = grid.cell_center(target_cell)
    target = center + rng.uniform(-0.45, 0.45, size=2) * grid.cell_size
    start = np.asarray(config.hand_start) + rng.uniform(
        -config.hand_start_jitter, config.hand_start_jitter, size=3
    )
    end = np.array([target[0], target[1], config.place_height])
    head = np.asarray(config.head_pos, dtype=np.float64)
    shoulder = head + np.array([0.05, -0.02, -0.18])

    frames = []
    for i in range(steps + 1):
        tau = i / steps
        s = min_jerk(tau)
        clean = start + s * (end - start)
        taper = 4.0 * tau * (1.0 - tau)  # exact endpoints, noisy transit
        palm = clean + config.hand_noise * taper * rng.normal(size=3)
        elbow = shoulder + 0.55 * (palm - shoulder) + np.array([0.0, 0.0, -0.04])

        # the eyes run ahead of the hand: fixate where the reach will be
        # after a lead fraction of the remaining progress has elapsed
        ahead = min_jerk(tau + config.gaze_lead * (1.0 - tau))
        look = (start + ahead * (end - start))[:2]
        gaze_dir = np.array([look[0], look[1], 0.0]) - head
        gaze_dir /= np.linalg.norm(gaze_dir)
        local = tilt_head_norm(np.eye(3))
        head_rot = rotation_aligning(local, gaze_dir)
        if config.gaze_noise > 0.0:
            axis = rng.normal(size=3)
            angle = rng.normal(0.0, config.gaze_noise)
            head_rot = rotation_about(axis, angle) @ head_rot
        frames.append(
            RawFrame(
                t=i * dt,
                palm=palm,
                elbow=elbow,
                shoulder=shoulder,
                head_pos=head,
                head_rot=head_rot,
            )
        )
    return HumanTrajectory(
        frames=tuple(frames),
        target_cell=tuple(target_cell),
        target_point=target,
        release_time=steps * dt,
    )


# -- robot motion execution ---------------------------------------------


class MotionExecutor:
    """Time-steps the arm along a queued sequence of plan phases."""

    def __init__(self, arm: ArmState):
        self.arm = arm
        self.phases: list[TrajectoryPlan] = []
        self.end_time: float | None = None

    @property
    def active(self) -> bool:
        return self.end_time is not None

    def start(self, t: float, plans: list[TrajectoryPlan]) -> None:
        if self.active:
            raise RuntimeError("motion already active; preempt first")
        offset = t
        rebased = []
        for plan in plans:
            ts = tuple(offset + (s - plan.timestamps[0]) for s in plan.timestamps)
            rebased.append(replace(plan, timestamps=ts))
            offset = ts[-1]
        self.phases = rebased
        self.end_time = offset

    def state_at(self, t: float) -> ArmState:
        if not self.active:
            return self.arm
        for plan in self.phases:
            if t <= plan.timestamps[-1]:
                return plan.state_at(t)
        return self.phases[-1].goal

    def preempt(self, t: float) -> None:
        """Cancel the active motion, freezing the arm where it is now."""
        if self.active:
            self.arm = self.state_at(t)
            self.phases = []
            self.end_time = None

    def advance(self, to_t: float) -> float | None:
        """Move the arm forward; returns the completion time if the active
        motion finishes at or before to_t, else None."""
        if not self.active:
            return None
        if to_t >= self.end_time:
            done = self.end_time
            self.arm = self.phases[-1].goal
            self.phases = []
            self.end_time = None
            return done
        self.arm = self.state_at(to_t)
        return None


# -- world state ----------------------------------------------------------


@dataclass
class WorldState:
    """Virtual clock plus the human playback cursor and the robot arm."""

    trajectory: HumanTrajectory
    config: SimConfig
    executor: MotionExecutor
    clock: float = 0.0
    cursor: int = 0
    revealed_at: float | None = None

    @property
    def detection_due(self) -> float:
        return self.trajectory.release_time + self.config.latency

    @property
    def arm(self) -> ArmState:
        return self.executor.arm


def detect_object(world: WorldState):
    """The object's table point once placed and past the sensing latency."""
    if world.clock >= world.detection_due - 1e-12:
        return world.trajectory.target_point.copy()
    return None


def step(world: WorldState, dt: float) -> list[tuple[float, str, object]]:
    """Advance the world by dt, returning (t, kind, payload) events.

    Events: human "frame"s at every 1/rate tick inside [clock, clock+dt),
    one "detected" when the latency elapses, and "motion_finished" when the
    arm completes its queued phases.  Events are time-ordered; a detection
    precedes a frame carrying the same timestamp.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0, t1 = world.clock, world.clock + dt
    events: list[tuple[float, int, str, object]] = []

    frame_dt = 1.0 / world.config.rate
    frames = world.trajectory.frames
    while world.cursor < len(frames) and frames[world.cursor].t < t1 - 1e-12:
        f = frames[world.cursor]
        if f.t >= t0 - 1e-12:
            events.append((f.t, 1, "frame", f))
        world.cursor += 1

    due = world.detection_due
    if world.revealed_at is None and t0 - 1e-12 <= due < t1 - 1e-12:
        world.revealed_at = due
        events.append((due, 0, "detected", world.trajectory.target_point.copy()))

    done = world.executor.advance(t1)
    if done is not None:
        events.append((done, 2, "motion_finished", None))

    world.clock = t1
    events.sort(key=lambda e: (e[0], e[1]))
    return [(t, kind, payload) for t, _, kind, payload in events]


# -- predictors -----------------------------------------------------------


class OraclePredictor:
    """Ground-truth stand-in: full confidence ramp at the true cell."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._target: tuple[int, int] | None = None
        self._release = 1.0

    def reset(self, trajectory: HumanTrajectory) -> None:
        self._target = trajectory.target_cell
        self._release = max(trajectory.release_time, 1e-9)

    def step(self, index: int, frame: FeatureFrame) -> Heatmap:
        values = np.zeros((self.grid.n, self.grid.m))
        c = confidence_weight(min(frame.raw.t, self._release), self._release)
        values[self._target] = c
        return Heatmap(self.grid, values)


class ModelPredictor:
    """Streams frames through a trained model, carrying the hidden state."""

    def __init__(self, model: IntentModel):
        self.model = model
        self._hidden = None

    @property
    def grid(self) -> GridSpec:
        return self.model.grid

    def reset(self, trajectory: HumanTrajectory | None = None) -> None:
        self._hidden = None

    def step(self, index: int, frame: FeatureFrame) -> Heatmap:
        heatmap, self._hidden = self.model.forward(frame.input, self._hidden)
        return heatmap


# -- trial runner -----------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    mode: str
    seed: int
    target_cell: tuple[int, int]
    response_time: float
    start_to_grab: float
    pred_dx: int | None
    pred_dy: int | None
    pred_grids: float | None
    pred_m: float | None
    preempts: int
    release_time: float
    detect_time: float

    def __post_init__(self):
        if not 0.0 <= self.response_time <= self.start_to_grab:
            raise ValueError("needs 0 <= response_time <= start_to_grab")


@dataclass(frozen=True)
class TrialConfig:
    """Everything a trial depends on besides the trajectory and mode."""

    grid: GridSpec = GridSpec()
    arbitration: ArbitrationConfig = field(default_factory=ArbitrationConfig)
    stomp: StompConfig = StompConfig()
    pick: PickConfig = PickConfig()
    sim: SimConfig = SimConfig()
    workspace: Workspace = Workspace()
    plane: TablePlane = field(default_factory=TablePlane.table)


def _plan_seed(trial_seed: int, counter: int) -> int:
    return int(np.random.SeedSequence([trial_seed, counter]).generate_state(1)[0])


def run_trial(
    mode: str,
    predictor,
    trajectory: HumanTrajectory,
    config: TrialConfig = TrialConfig(),
    seed: int = 0,
) -> TrialResult:
    """One full trial from the ready pose to a completed grasp.

    Reactive mode never consults the predictor; preemptive mode feeds every
    frame (until the object is detected) through it and lets the arbiter
    launch and preempt motions.  All timing is virtual-clock, measured from
    the first human frame.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == PREEMPTIVE and predictor is None:
        raise ValueError("preemptive mode needs a predictor")

    arbiter = Arbiter(config.grid, config.arbitration)
    executor = MotionExecutor(config.pick.ready_state())
    if predictor is not None:
        predictor.reset(trajectory)

    dt = 1.0 / config.sim.rate
    frames = trajectory.frames
    detection_due = trajectory.release_time + config.sim.latency
    prev_feature: FeatureFrame | None = None
    plan_counter = 0
    first_command: float | None = None
    grab_time: float | None = None
    detect_time: float | None = None

    def execute(commands, at_t):
        nonlocal plan_counter, first_command
        for cmd in commands:
            if isinstance(cmd, Preempt):
                executor.preempt(cmd.t)
                continue
            assert isinstance(cmd, Motion)
            if first_command is None:
                first_command = cmd.t
            stomp_cfg = replace(config.stomp, seed=_plan_seed(seed, plan_counter))
            plan_counter += 1
            if cmd.kind == "refinement":
                plans = plan_refinement(
                    executor.arm, cmd.point, config.pick, config.workspace
                )
            else:
                plans = plan_pick_sequence(
                    executor.arm,
                    cmd.point,
                    (),
                    stomp_cfg,
                    config.pick,
                    config.workspace,
                    grasp=(cmd.kind == "definitive"),
                )
            executor.start(cmd.t, plans)

    k = 0
    while grab_time is None:
        t = k * dt
        if t > config.sim.timeout:
            raise TrialTimeout(f"no grasp after {config.sim.timeout} virtual seconds")
        if detect_time is None and t >= detection_due - 1e-12:
            # detections outrank same-tick frames: the prediction loop
            # stops the moment the object is known
            detect_time = t
            execute(arbiter.on_object_detected(t, trajectory.target_point), t)
        elif k < len(frames) and mode == PREEMPTIVE and detect_time is None:
            prev_feature = build_features(prev_feature, frames[k], config.plane)
            heatmap = predictor.step(k, prev_feature)
            execute(arbiter.on_heatmap(t, heatmap), t)
        t_next = (k + 1) * dt
        while True:
            done = executor.advance(t_next)
            if done is None:
                break
            execute(arbiter.on_motion_finished(done), done)
            if arbiter.state == GRASPED:
                grab_time = done
                break
        k += 1

    error = arbiter.prediction_error(trajectory.target_cell)
    dx, dy, grids, meters = error if error is not None else (None, None, None, None)
    return TrialResult(
        mode=mode,
        seed=seed,
        target_cell=trajectory.target_cell,
        response_time=first_command,
        start_to_grab=grab_time,
        pred_dx=dx,
        pred_dy=dy,
        pred_grids=grids,
        pred_m=meters,
        preempts=arbiter.preempt_count,
        release_time=trajectory.release_time,
        detect_time=detect_time,
    )
