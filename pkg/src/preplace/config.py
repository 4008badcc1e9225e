"""Flat key/value configuration shared by every CLI subcommand.

A config file is a single JSON object of scalar keys (no nesting), one
key per tunable field across the config dataclasses.  Resolution order:
defaults, then file values, then CLI flags.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .arbitration import ArbitrationConfig
from .grid import GridSpec
from .intent.labels import LabelParams
from .intent.train import TrainConfig
from .memory import MemoryConfig
from .planner import PickConfig, StompConfig
from .sim import SimConfig, TrialConfig


class UnknownConfigKey(ValueError):
    pass


class ConfigFileError(ValueError):
    pass


# flat key -> (section attr, field path, caster)
_KEYS: dict[str, tuple[str, str, type]] = {
    "grid_n": ("grid", "n", int),
    "grid_m": ("grid", "m", int),
    "grid_cell_size": ("grid", "cell_size", float),
    "grid_origin_x": ("grid", "origin.0", float),
    "grid_origin_y": ("grid", "origin.1", float),
    "label_s_x": ("labels", "s_x", float),
    "label_s_y": ("labels", "s_y", float),
    "label_steepness": ("labels", "steepness", float),
    "train_epochs": ("train", "epochs", int),
    "train_lr": ("train", "lr", float),
    "train_batch_size": ("train", "batch_size", int),
    "train_hidden_dim": ("train", "hidden_dim", int),
    "train_grad_clip": ("train", "grad_clip", float),
    "train_beta1": ("train", "beta1", float),
    "train_beta2": ("train", "beta2", float),
    "memory_history_len": ("memory", "history_len", int),
    "memory_epsilon": ("memory", "epsilon", float),
    "arb_gamma": ("arbitration", "gamma", float),
    "arb_tol_x": ("arbitration", "tol_x", int),
    "arb_tol_y": ("arbitration", "tol_y", int),
    "stomp_waypoints": ("stomp", "num_waypoints", int),
    "stomp_rollouts": ("stomp", "rollouts", int),
    "stomp_iterations": ("stomp", "iterations", int),
    "stomp_noise_std": ("stomp", "noise_std", float),
    "stomp_smooth_weight": ("stomp", "smooth_weight", float),
    "stomp_obstacle_weight": ("stomp", "obstacle_weight", float),
    "stomp_temperature": ("stomp", "temperature", float),
    "stomp_clearance_margin": ("stomp", "clearance_margin", float),
    "pick_travel_z": ("pick", "travel_z", float),
    "pick_pregrasp_z": ("pick", "pregrasp_z", float),
    "pick_grasp_z": ("pick", "grasp_z", float),
    "pick_ready_x": ("pick", "ready.0", float),
    "pick_ready_y": ("pick", "ready.1", float),
    "pick_ready_z": ("pick", "ready.2", float),
    "pick_speed_x": ("pick", "speed.0", float),
    "pick_speed_y": ("pick", "speed.1", float),
    "pick_speed_z": ("pick", "speed.2", float),
    "sim_rate": ("sim", "rate", float),
    "sim_duration_min": ("sim", "duration_range.0", float),
    "sim_duration_max": ("sim", "duration_range.1", float),
    "sim_hand_start_x": ("sim", "hand_start.0", float),
    "sim_hand_start_y": ("sim", "hand_start.1", float),
    "sim_hand_start_z": ("sim", "hand_start.2", float),
    "sim_hand_start_jitter": ("sim", "hand_start_jitter", float),
    "sim_head_x": ("sim", "head_pos.0", float),
    "sim_head_y": ("sim", "head_pos.1", float),
    "sim_head_z": ("sim", "head_pos.2", float),
    "sim_gaze_lead": ("sim", "gaze_lead", float),
    "sim_hand_noise": ("sim", "hand_noise", float),
    "sim_gaze_noise": ("sim", "gaze_noise", float),
    "sim_latency": ("sim", "latency", float),
    "sim_place_height": ("sim", "place_height", float),
    "sim_timeout": ("sim", "timeout", float),
    "eval_gamma": ("scalars", "eval_gamma", float),
}


@dataclass
class AppConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    labels: LabelParams = field(default_factory=LabelParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    arbitration: ArbitrationConfig = field(default_factory=ArbitrationConfig)
    stomp: StompConfig = field(default_factory=StompConfig)
    pick: PickConfig = field(default_factory=PickConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    eval_gamma: float = 0.5

    def _get(self, key: str):
        section, path, _ = _KEYS[key]
        obj = self if section == "scalars" else getattr(self, section)
        parts = path.split(".")
        val = getattr(obj, parts[0])
        if len(parts) == 2:
            val = val[int(parts[1])]
        return val

    def flat(self) -> dict:
        """Full resolved snapshot, sorted keys (the replay document)."""
        return {k: self._get(k) for k in sorted(_KEYS)}

    def with_values(self, values: dict) -> "AppConfig":
        """Return a copy with the given flat keys applied."""
        unknown = set(values) - set(_KEYS)
        if unknown:
            raise UnknownConfigKey(f"unknown config keys: {sorted(unknown)}")
        # group edits per section so tuples rebuild once
        out = self
        by_section: dict[str, dict[str, object]] = {}
        for key, raw in values.items():
            section, path, cast = _KEYS[key]
            try:
                by_section.setdefault(section, {})[path] = cast(raw)
            except (TypeError, ValueError) as e:
                raise ConfigFileError(f"bad value for {key}: {raw!r}") from e
        for section, edits in by_section.items():
            if section == "scalars":
                for path, v in edits.items():
                    out = replace(out, **{path: v})
                continue
            obj = getattr(out, section)
            fields: dict[str, object] = {}
            for path, v in edits.items():
                parts = path.split(".")
                if len(parts) == 1:
                    fields[parts[0]] = v
                else:
                    name, idx = parts[0], int(parts[1])
                    cur = list(fields.get(name, getattr(obj, name)))
                    cur[idx] = v
                    fields[name] = tuple(cur)
            obj = replace(obj, **fields)
            out = replace(out, **{section: obj})
        # nested configs that embed other configs stay in sync
        out = replace(
            out,
            arbitration=replace(out.arbitration, memory=out.memory),
            train=replace(out.train, labels=out.labels),
        )
        return out

    def trial_config(self) -> TrialConfig:
        return TrialConfig(
            grid=self.grid,
            arbitration=self.arbitration,
            stomp=self.stomp,
            pick=self.pick,
            sim=self.sim,
        )


def load_config_file(path: str | Path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigFileError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigFileError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(obj, dict) or any(isinstance(v, (dict, list)) for v in obj.values()):
        raise ConfigFileError("config must be a flat JSON object of scalars")
    return obj


def resolve(file_path: str | Path | None = None, overrides: dict | None = None) -> AppConfig:
    """defaults <- file <- CLI overrides."""
    cfg = AppConfig()
    if file_path is not None:
        cfg = cfg.with_values(load_config_file(file_path))
    if overrides:
        cfg = cfg.with_values(overrides)
    return cfg
