"""Training: confidence-weighted squared-error loss, BPTT, Adam."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..grid import GridMismatch, GridSpec
from .labels import LabelParams, confidence_weight, make_label
from .network import IntentModel


class EmptyDataset(ValueError):
    """Training requires at least one trajectory."""


class NonFiniteLoss(FloatingPointError):
    """Loss diverged to nan or inf during training."""


class ShapeMismatch(ValueError):
    """Prediction and label sequences disagree in length or grid."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 8
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 5.0
    hidden_dim: int = 64
    labels: LabelParams = field(default_factory=LabelParams)


@dataclass(frozen=True)
class TrainingSequence:
    """One supervised trajectory: per-frame inputs plus the true cell."""

    inputs: np.ndarray  # (T, input_dim)
    target_cell: tuple[int, int]

    def __post_init__(self):
        arr = np.asarray(self.inputs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise ValueError("trajectory needs at least 2 frames")
        object.__setattr__(self, "inputs", arr)
        object.__setattr__(self, "target_cell", tuple(int(v) for v in self.target_cell))


def sequence_loss(preds, labels, total: int) -> float:
    """Sum over steps of (cell-summed squared error) * confidence weight.

    preds/labels: sequences of (n, m) arrays or Heatmaps; step t carries
    the ramp weight at elapsed step t of `total`, where `total` is the
    final step index (so the last frame of a full trajectory is weighted
    by the ramp's endpoint value).
    """
    pv = [np.asarray(getattr(p, "values", p), dtype=np.float64) for p in preds]
    lv = [np.asarray(getattr(l, "values", l), dtype=np.float64) for l in labels]
    if len(pv) != len(lv):
        raise ShapeMismatch(f"{len(pv)} predictions vs {len(lv)} labels")
    total = int(total)
    if total < len(pv) - 1 or total < 1:
        raise ShapeMismatch("total steps shorter than the sequence")
    loss = 0.0
    for t, (p, l) in enumerate(zip(pv, lv)):
        if p.shape != l.shape:
            raise ShapeMismatch(f"step {t}: {p.shape} vs {l.shape}")
        loss += float(np.sum((l - p) ** 2)) * confidence_weight(t, total)
    return loss


def _loss_and_grad(preds: np.ndarray, labels: np.ndarray, total: int):
    """Vectorized loss plus dLoss/dpreds for one trajectory."""
    t_len = preds.shape[0]
    w = np.array([confidence_weight(t, total) for t in range(t_len)])
    diff = preds - labels
    loss = float(np.sum(diff * diff * w[:, None, None]))
    d_preds = 2.0 * diff * w[:, None, None]
    return loss, d_preds


def _label_stack(seq: TrainingSequence, grid: GridSpec, params: LabelParams):
    t_len = seq.inputs.shape[0]
    return np.stack(
        [
            make_label(seq.target_cell, grid, params, t, t_len - 1).values
            for t in range(t_len)
        ]
    )


def _clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> None:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


class AdamState:
    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, cfg: TrainConfig):
        self.t += 1
        b1, b2 = cfg.beta1, cfg.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g
            params[k] -= cfg.lr * (self.m[k] / bc1) / (
                np.sqrt(self.v[k] / bc2) + cfg.adam_eps
            )


def train(
    dataset: Sequence[TrainingSequence],
    grid: GridSpec,
    config: TrainConfig = TrainConfig(),
    model: IntentModel | None = None,
    log: Callable[[int, float], None] | None = None,
) -> tuple[IntentModel, list[float]]:
    """Fit the predictor; returns (model, per-epoch mean trajectory loss).

    Deterministic for a fixed dataset and config: init and shuffling both
    derive from config.seed.
    """
    if not dataset:
        raise EmptyDataset("no trajectories")
    for seq in dataset:
        if seq.inputs.shape[0] < 2:
            raise ValueError("trajectory needs at least 2 frames")
    input_dim = dataset[0].inputs.shape[1]
    if model is None:
        model = IntentModel(
            grid, input_dim=input_dim, hidden_dim=config.hidden_dim, seed=config.seed
        )
    elif model.grid != grid:
        raise GridMismatch("model grid differs from dataset grid")

    labels = [_label_stack(seq, grid, config.labels) for seq in dataset]
    rng = np.random.default_rng(config.seed)
    adam = AdamState(model.params)
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(dataset))
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grads: dict[str, np.ndarray] | None = None
            for idx in batch:
                seq = dataset[idx]
                preds, cache = model.forward_sequence(seq.inputs)
                loss, d_preds = _loss_and_grad(
                    preds, labels[idx], seq.inputs.shape[0] - 1
                )
                if not np.isfinite(loss):
                    raise NonFiniteLoss(f"epoch {epoch}: loss {loss}")
                total_loss += loss
                g = model.backward_sequence(cache, d_preds)
                if grads is None:
                    grads = g
                else:
                    for k in grads:
                        grads[k] += g[k]
            assert grads is not None
            for k in grads:
                grads[k] /= len(batch)
            _clip_gradients(grads, config.grad_clip)
            adam.step(model.params, grads, config)
        mean_loss = total_loss / len(dataset)
        epoch_losses.append(mean_loss)
        if log is not None:
            log(epoch, mean_loss)
    return model, epoch_losses
