"""Preemptive human-to-robot placement handovers.

Streaming hand/gaze features go in, a grid heatmap of likely placement
cells comes out, and a simulated pick arm starts moving toward the peak
cell before the object is ever put down.  Includes the full training
pipeline for the intent predictor, a STOMP planner, a deterministic
trial simulator, a reactive-vs-preemptive study harness, and a live
WebSocket service.
"""

from .arbitration import Arbiter, ArbitrationConfig, within_tolerance
from .config import AppConfig, resolve
from .geometry import (
    RawFrame,
    TablePlane,
    build_features,
    feature_sequence,
    gaze_table_intersection,
)
from .grid import GridSpec, Heatmap
from .harness import (
    StudyReport,
    export_report,
    gen_dataset,
    load_dataset,
    run_study,
    significance,
    to_training_sequences,
)
from .intent import IntentModel, TrainConfig, evaluate, load_model, save_model, train
from .memory import MemoryConfig, PredictionMemory
from .planner import (
    ArmState,
    KeepOutZone,
    PickConfig,
    StompConfig,
    TrajectoryPlan,
    Workspace,
    plan_pick_sequence,
    plan_refinement,
    stomp_plan,
    trajectory_cost,
)
from .sim import (
    HumanTrajectory,
    ModelPredictor,
    OraclePredictor,
    SimConfig,
    TrialConfig,
    TrialResult,
    gen_trajectory,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "Arbiter",
    "ArbitrationConfig",
    "ArmState",
    "GridSpec",
    "Heatmap",
    "HumanTrajectory",
    "IntentModel",
    "KeepOutZone",
    "MemoryConfig",
    "ModelPredictor",
    "OraclePredictor",
    "PickConfig",
    "PredictionMemory",
    "RawFrame",
    "SimConfig",
    "StompConfig",
    "StudyReport",
    "TablePlane",
    "TrainConfig",
    "TrajectoryPlan",
    "TrialConfig",
    "TrialResult",
    "Workspace",
    "build_features",
    "evaluate",
    "export_report",
    "feature_sequence",
    "gaze_table_intersection",
    "gen_dataset",
    "gen_trajectory",
    "load_dataset",
    "load_model",
    "plan_pick_sequence",
    "plan_refinement",
    "resolve",
    "run_study",
    "run_trial",
    "save_model",
    "significance",
    "stomp_plan",
    "to_training_sequences",
    "train",
    "trajectory_cost",
    "within_tolerance",
]
