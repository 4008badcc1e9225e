"""Realtime WebSocket loop: the client plays the human, the server runs
predict, fuse, arbitrate, plan, and streams back heatmaps, robot state,
and trial metrics.

Timing is wall-clock as reported by client frame timestamps; the arm is
simulated forward between messages with the planner's speed model, so
server timings match an offline replay of the same message timeline.
"""

from __future__ import annotations

import json
from dataclasses import replace

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .arbitration import DEFINITIVE, GRASPED, IDLE, PREDICTIVE, Arbiter, Motion, Preempt
from .config import AppConfig
from .geometry import FeatureFrame, RawFrame, TablePlane, build_features
from .grid import GridSpec
from .intent.network import IntentModel
from .planner import Workspace, plan_pick_sequence, plan_refinement
from .sim import MODES, PREEMPTIVE, REACTIVE, MotionExecutor, _plan_seed


class ModelUnavailable(RuntimeError):
    """Preemptive session requested but the service has no model."""


class MalformedMessage(ValueError):
    pass


def _vec(obj, k: int, name: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise MalformedMessage(f"{name} must be a list of {k} numbers")
    if arr.shape != (k,) or not np.all(np.isfinite(arr)):
        raise MalformedMessage(f"{name} must be {k} finite numbers")
    return arr


class Session:
    """One client connection: one active trial at a time, messages handled
    strictly in arrival order."""

    def __init__(
        self,
        model: IntentModel | None,
        config: AppConfig,
        seed: int = 0,
        mode: str | None = None,
    ):
        self.model = model
        self.config = config
        self.grid: GridSpec = config.grid
        self.plane = TablePlane.table()
        self.workspace = Workspace()
        self.seed = seed
        self.closed = False
        self._trial(mode or (PREEMPTIVE if model else REACTIVE))

    def _trial(self, mode: str) -> None:
        if mode not in MODES:
            raise MalformedMessage(f"mode must be one of {MODES}")
        if mode == PREEMPTIVE and self.model is None:
            raise ModelUnavailable("no model loaded; preemptive mode unavailable")
        self.mode = mode
        self.arbiter = Arbiter(self.grid, self.config.arbitration)
        self.executor = MotionExecutor(self.config.pick.ready_state())
        self.hidden: np.ndarray | None = None
        self.prev_feature: FeatureFrame | None = None
        self.t0: float | None = None
        self.last_t: float | None = None
        self.plan_counter = 0
        self.first_command: float | None = None
        self.grab_time: float | None = None
        self.detected = False
        self.preempted_now = False
        self.metrics_sent = False

    # -- command plumbing (same policy as the offline trial loop) ----------

    def _execute(self, commands) -> None:
        for cmd in commands:
            if isinstance(cmd, Preempt):
                self.executor.preempt(cmd.t)
                self.preempted_now = True
                continue
            assert isinstance(cmd, Motion)
            if self.first_command is None:
                self.first_command = cmd.t
            stomp = replace(
                self.config.stomp, seed=_plan_seed(self.seed, self.plan_counter)
            )
            self.plan_counter += 1
            if cmd.kind == "refinement":
                plans = plan_refinement(
                    self.executor.arm, cmd.point, self.config.pick, self.workspace
                )
            else:
                plans = plan_pick_sequence(
                    self.executor.arm,
                    cmd.point,
                    (),
                    stomp,
                    self.config.pick,
                    self.workspace,
                    grasp=(cmd.kind == "definitive"),
                )
            self.executor.start(cmd.t, plans)

    def _advance(self, to_t: float) -> None:
        while True:
            done = self.executor.advance(to_t)
            if done is None:
                return
            self._execute(self.arbiter.on_motion_finished(done))
            if self.arbiter.state == GRASPED and self.grab_time is None:
                self.grab_time = done

    # -- outbound messages --------------------------------------------------

    def _robot_msg(self, t: float) -> dict:
        state = self.executor.state_at(t)
        action = {IDLE: "idle", PREDICTIVE: "predictive",
                  DEFINITIVE: "definitive", GRASPED: "grasped"}[self.arbiter.state]
        goal = None
        if self.arbiter.state == PREDICTIVE and self.arbiter.goal_cell is not None:
            goal = [float(v) for v in self.grid.cell_center(self.arbiter.goal_cell)]
        elif self.arbiter.state == DEFINITIVE and self.arbiter.object_point is not None:
            goal = [float(v) for v in self.arbiter.object_point]
        msg = {
            "type": "robot",
            "t": t,
            "pose": [float(v) for v in state.pos],
            "gripper": state.gripper,
            "action": action,
            "goal": goal,
            "preempted": self.preempted_now,
        }
        self.preempted_now = False
        return msg

    def _metrics_msg(self) -> dict | None:
        if self.metrics_sent or self.grab_time is None or self.t0 is None:
            return None
        self.metrics_sent = True
        error_grids = None
        if self.arbiter.object_point is not None:
            true_cell = self.grid.point_to_cell(self.arbiter.object_point)
            err = self.arbiter.prediction_error(true_cell)
            if err is not None:
                error_grids = err[2]
        return {
            "type": "metrics",
            "response_time": (self.first_command - self.t0
                              if self.first_command is not None else None),
            "start_to_grab": self.grab_time - self.t0,
            "error_grids": error_grids,
        }

    # -- inbound messages ---------------------------------------------------

    def handle(self, text: str) -> list[dict]:
        try:
            return self._dispatch(text)
        except (MalformedMessage, ModelUnavailable, ValueError, KeyError, TypeError) as e:
            detail = str(e) or type(e).__name__
            return [{"type": "error", "detail": detail}]

    def _dispatch(self, text: str) -> list[dict]:
        try:
            msg = json.loads(text)
        except json.JSONDecodeError as e:
            raise MalformedMessage(f"not valid JSON: {e}")
        if not isinstance(msg, dict) or "type" not in msg:
            raise MalformedMessage("message must be an object with a type field")
        kind = msg["type"]
        if kind == "frame":
            return self._on_frame(msg)
        if kind == "place":
            return self._on_place(msg)
        if kind == "reset":
            mode = msg.get("mode", self.mode)
            self._trial(mode)
            return [self._robot_msg(0.0)]
        if kind == "close":
            self.closed = True
            return []
        raise MalformedMessage(f"unknown message type {kind!r}")

    def _on_frame(self, msg: dict) -> list[dict]:
        t = msg.get("t")
        if not isinstance(t, (int, float)) or not np.isfinite(t):
            raise MalformedMessage("frame needs a finite numeric t")
        t = float(t)
        if self.last_t is not None and t <= self.last_t:
            raise MalformedMessage(f"frame t={t} not after previous t={self.last_t}")
        raw = RawFrame(
            t=t,
            palm=_vec(msg.get("palm"), 3, "palm"),
            elbow=_vec(msg.get("elbow"), 3, "elbow"),
            shoulder=_vec(msg.get("shoulder"), 3, "shoulder"),
            head_pos=_vec(msg.get("head_pos"), 3, "head_pos"),
            head_rot=_vec(msg.get("head_rot"), 9, "head_rot").reshape(3, 3),
        )
        if self.t0 is None:
            self.t0 = t
        self.last_t = t
        self._advance(t)

        out: list[dict] = []
        if self.mode == PREEMPTIVE and not self.detected and self.grab_time is None:
            self.prev_feature = build_features(self.prev_feature, raw, self.plane)
            heatmap, self.hidden = self.model.forward(
                self.prev_feature.input, self.hidden
            )
            commands = self.arbiter.on_heatmap(t, heatmap)
            fused = self.arbiter.memory.weighted()
            peak_p, peak_cell = fused.peak()
            out.append({
                "type": "heatmap",
                "t": t,
                "values": heatmap.values.tolist(),
                "fused": fused.values.tolist(),
                "peak": {"p": float(peak_p), "cell": [int(v) for v in peak_cell]},
            })
            self._execute(commands)
        out.append(self._robot_msg(t))
        metrics = self._metrics_msg()
        if metrics:
            out.append(metrics)
        return out

    def _on_place(self, msg: dict) -> list[dict]:
        if self.detected:
            raise MalformedMessage("object already placed this trial")
        point = _vec(msg.get("point"), 2, "point")
        t = self.last_t if self.last_t is not None else 0.0
        if self.t0 is None:
            self.t0 = t
        self.detected = True
        self._execute(self.arbiter.on_object_detected(t, point))
        out = [self._robot_msg(t)]
        metrics = self._metrics_msg()
        if metrics:
            out.append(metrics)
        return out


def create_app(
    model: IntentModel | None = None,
    config: AppConfig | None = None,
    seed: int = 0,
) -> FastAPI:
    config = config or AppConfig()
    app = FastAPI(title="preplace service")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        mode = websocket.query_params.get("mode")
        try:
            session = Session(model, config, seed=seed, mode=mode)
        except (ModelUnavailable, MalformedMessage) as e:
            await websocket.send_text(json.dumps({"type": "error", "detail": str(e)}))
            await websocket.close()
            return
        while not session.closed:
            try:
                text = await websocket.receive_text()
            except WebSocketDisconnect:
                return
            for out in session.handle(text):
                await websocket.send_text(json.dumps(out))
        await websocket.close()

    return app
