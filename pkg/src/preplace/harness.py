"""Dataset generation, the paired reactive/preemptive study, and reports.

Datasets are JSON Lines of raw human frames (features are always derived
at load time, so the stored format survives feature-layout changes).  The
study runner pairs both modes on identical trajectories per (cell, trial)
seed so timing differences are attributable to arbitration alone.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import RawFrame, TablePlane, feature_sequence
from .grid import GridSpec
from .intent.network import IntentModel
from .intent.train import TrainingSequence
from .sim import (
    MODES,
    PREEMPTIVE,
    REACTIVE,
    HumanTrajectory,
    ModelPredictor,
    SimConfig,
    TrialConfig,
    TrialResult,
    gen_trajectory,
    run_trial,
)


class IoFailure(OSError):
    """Reading or writing a dataset/report file failed."""


class TooFewSamples(ValueError):
    """The significance test needs at least two samples per side."""


# -- dataset -----------------------------------------------------------------


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    grid: GridSpec
    trajectory: HumanTrajectory


def _trajectory_json(rec_id: str, grid: GridSpec, traj: HumanTrajectory) -> str:
    return json.dumps(
        {
            "id": rec_id,
            "grid": {
                "n": grid.n,
                "m": grid.m,
                "cell_size_m": grid.cell_size,
                "origin": list(grid.origin),
            },
            "target_cell": list(traj.target_cell),
            "target_point": [float(v) for v in traj.target_point],
            "release_time": traj.release_time,
            "frames": [
                {
                    "t": f.t,
                    "palm": f.palm.tolist(),
                    "elbow": f.elbow.tolist(),
                    "shoulder": f.shoulder.tolist(),
                    "head_pos": f.head_pos.tolist(),
                    "head_rot": f.head_rot.reshape(-1).tolist(),
                }
                for f in traj.frames
            ],
        },
        separators=(",", ":"),
    )


def gen_dataset(
    count: int,
    grid: GridSpec,
    config: SimConfig,
    seed: int,
    path: str | Path,
) -> list[DatasetRecord]:
    """Write `count` seeded trajectories with uniform-random target cells."""
    if count < 1:
        raise ValueError("count must be >= 1")
    picker = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    records = []
    lines = []
    for i in range(count):
        cell = (int(picker.integers(grid.n)), int(picker.integers(grid.m)))
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1, i]))
        traj = gen_trajectory(rng, grid, cell, config)
        rec = DatasetRecord(id=f"traj-{seed}-{i:05d}", grid=grid, trajectory=traj)
        records.append(rec)
        lines.append(_trajectory_json(rec.id, grid, traj))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write dataset {path}: {e}") from e
    return records


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"cannot read dataset {path}: {e}") from e
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            g = obj["grid"]
            grid = GridSpec(g["n"], g["m"], g["cell_size_m"], tuple(g["origin"]))
            frames = tuple(
                RawFrame(
                    t=f["t"],
                    palm=f["palm"],
                    elbow=f["elbow"],
                    shoulder=f["shoulder"],
                    head_pos=f["head_pos"],
                    head_rot=np.asarray(f["head_rot"], dtype=np.float64).reshape(3, 3),
                )
                for f in obj["frames"]
            )
            traj = HumanTrajectory(
                frames=frames,
                target_cell=tuple(obj["target_cell"]),
                target_point=obj["target_point"],
                release_time=obj["release_time"],
            )
            records.append(DatasetRecord(id=obj["id"], grid=grid, trajectory=traj))
        except (KeyError, ValueError, TypeError) as e:
            raise IoFailure(f"{path}:{lineno}: malformed trajectory: {e}") from e
    return records


def to_training_sequences(
    records: Sequence[DatasetRecord], plane: TablePlane | None = None
) -> list[TrainingSequence]:
    """Derive model inputs from raw frames for every record."""
    plane = plane or TablePlane.table()
    out = []
    for rec in records:
        feats = feature_sequence(rec.trajectory.frames, plane)
        out.append(
            TrainingSequence(
                inputs=np.stack([f.input for f in feats]),
                target_cell=rec.trajectory.target_cell,
            )
        )
    return out


# -- significance ------------------------------------------------------------


def significance(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Mann-Whitney U p-value, normal approximation with tie
    correction (no continuity correction)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise TooFewSamples("need at least 2 samples per side")
    pooled = np.concatenate([a, b])
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    # midranks for ties
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    r1 = float(np.sum(ranks[:n1]))
    u1 = r1 - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    mu = n1 * n2 / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return 1.0  # all observations identical: no evidence of a shift
    z = (u1 - mu) / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))


# -- study -------------------------------------------------------------------

ROW_FIELDS = (
    "cell_x",
    "cell_y",
    "mode",
    "trials",
    "response_mean",
    "response_median",
    "response_q1",
    "response_q3",
    "grab_mean",
    "grab_median",
    "grab_q1",
    "grab_q3",
    "error_grids_mean",
    "preempts_mean",
)


@dataclass
class StudyReport:
    config: dict
    trials: list[TrialResult] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def rows(self) -> list[dict]:
        """One summary row per (cell, mode), in cell-major sorted order."""
        rows = []
        keys = sorted({(t.target_cell, t.mode) for t in self.trials})
        for cell, mode in keys:
            group = [
                t for t in self.trials if t.target_cell == cell and t.mode == mode
            ]
            resp = np.array([t.response_time for t in group])
            grab = np.array([t.start_to_grab for t in group])
            errs = [t.pred_grids for t in group if t.pred_grids is not None]
            rows.append(
                {
                    "cell_x": cell[0],
                    "cell_y": cell[1],
                    "mode": mode,
                    "trials": len(group),
                    "response_mean": float(resp.mean()),
                    "response_median": float(np.median(resp)),
                    "response_q1": float(np.percentile(resp, 25)),
                    "response_q3": float(np.percentile(resp, 75)),
                    "grab_mean": float(grab.mean()),
                    "grab_median": float(np.median(grab)),
                    "grab_q1": float(np.percentile(grab, 25)),
                    "grab_q3": float(np.percentile(grab, 75)),
                    "error_grids_mean": float(np.mean(errs)) if errs else None,
                    "preempts_mean": float(np.mean([t.preempts for t in group])),
                }
            )
        return rows

    def paired(self) -> list[dict]:
        """Per-seed reactive minus preemptive differences, matched trials."""
        by_key = {(t.target_cell, t.seed, t.mode): t for t in self.trials}
        out = []
        for (cell, seed, mode), t in sorted(
            by_key.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])
        ):
            if mode != REACTIVE:
                continue
            p = by_key.get((cell, seed, PREEMPTIVE))
            if p is None:
                continue
            out.append(
                {
                    "cell_x": cell[0],
                    "cell_y": cell[1],
                    "seed": seed,
                    "d_response": t.response_time - p.response_time,
                    "d_grab": t.start_to_grab - p.start_to_grab,
                }
            )
        return out

    def overall(self) -> dict:
        resp = {m: [t.response_time for t in self.trials if t.mode == m] for m in MODES}
        grab = {m: [t.start_to_grab for t in self.trials if t.mode == m] for m in MODES}
        pairs = self.paired()
        out = {
            "reactive_trials": len(resp[REACTIVE]),
            "preemptive_trials": len(resp[PREEMPTIVE]),
            "paired_trials": len(pairs),
            "improvement_response_mean": (
                float(np.mean([p["d_response"] for p in pairs])) if pairs else None
            ),
            "improvement_grab_mean": (
                float(np.mean([p["d_grab"] for p in pairs])) if pairs else None
            ),
            "preemptive_win_rate": (
                float(np.mean([p["d_grab"] > 0 for p in pairs])) if pairs else None
            ),
            "p_response": None,
            "p_grab": None,
        }
        if len(resp[REACTIVE]) >= 2 and len(resp[PREEMPTIVE]) >= 2:
            out["p_response"] = significance(resp[REACTIVE], resp[PREEMPTIVE])
            out["p_grab"] = significance(grab[REACTIVE], grab[PREEMPTIVE])
        return out


def run_study(
    cells: Sequence[tuple[int, int]],
    trials_per_cell: int,
    predictor=None,
    modes: Sequence[str] = MODES,
    seed: int = 0,
    config: TrialConfig = TrialConfig(),
) -> StudyReport:
    """Paired-seed study over the given cells.

    The same generated trajectory backs every mode at a given (cell, trial)
    index; trial failures are recorded in the report, not raised.
    """
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
    if PREEMPTIVE in modes and predictor is None:
        raise ValueError("preemptive mode needs a predictor")
    if isinstance(predictor, IntentModel):
        predictor = ModelPredictor(predictor)

    report = StudyReport(config=_config_snapshot(config, cells, trials_per_cell, seed))
    for cell in cells:
        for j in range(trials_per_cell):
            ss = np.random.SeedSequence([seed, int(cell[0]), int(cell[1]), j])
            trial_seed = int(ss.generate_state(1)[0])
            traj = gen_trajectory(
                np.random.default_rng(ss.spawn(1)[0]), config.grid, cell, config.sim
            )
            for mode in modes:
                try:
                    report.trials.append(
                        run_trial(
                            mode,
                            predictor if mode == PREEMPTIVE else None,
                            traj,
                            config,
                            seed=trial_seed,
                        )
                    )
                except Exception as e:  # recorded, not fatal
                    report.errors.append(
                        {
                            "cell_x": cell[0],
                            "cell_y": cell[1],
                            "trial": j,
                            "mode": mode,
                            "error": f"{type(e).__name__}: {e}",
                        }
                    )
    # deterministic merge order even if trials ever run in parallel
    report.trials.sort(key=lambda t: (t.target_cell, t.mode, t.seed))
    report.errors.sort(key=lambda e: (e["cell_x"], e["cell_y"], e["trial"], e["mode"]))
    return report


def _config_snapshot(config: TrialConfig, cells, trials_per_cell, seed) -> dict:
    snap = asdict(config)
    snap["plane"] = {
        "normal": config.plane.normal.tolist(),
        "point": config.plane.point.tolist(),
    }
    snap["cells"] = [list(c) for c in cells]
    snap["trials_per_cell"] = trials_per_cell
    snap["seed"] = seed
    return snap


# -- export ------------------------------------------------------------------


def _trial_dict(t: TrialResult) -> dict:
    return {
        "mode": t.mode,
        "seed": t.seed,
        "cell_x": t.target_cell[0],
        "cell_y": t.target_cell[1],
        "response_time": t.response_time,
        "start_to_grab": t.start_to_grab,
        "pred_dx": t.pred_dx,
        "pred_dy": t.pred_dy,
        "pred_grids": t.pred_grids,
        "pred_m": t.pred_m,
        "preempts": t.preempts,
        "release_time": t.release_time,
        "detect_time": t.detect_time,
    }


def export_report(report: StudyReport, path: str | Path, format: str = "json") -> Path:
    """Serialize summaries (and, for JSON, the raw trials) to disk."""
    path = Path(path)
    rows = report.rows()
    try:
        if format == "json":
            doc = {
                "config": report.config,
                "rows": rows,
                "overall": report.overall(),
                "paired": report.paired(),
                "trials": [_trial_dict(t) for t in report.trials],
                "errors": report.errors,
            }
            path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        elif format == "csv":
            with open(path, "w", newline="") as f:
                w = csv.DictWriter(f, fieldnames=ROW_FIELDS)
                w.writeheader()
                for row in rows:
                    w.writerow(
                        {
                            k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                            for k, v in row.items()
                        }
                    )
        else:
            raise ValueError(f"unknown report format {format!r}")
    except OSError as e:
        raise IoFailure(f"cannot write report {path}: {e}") from e
    return path
