"""Recurrent-convolutional placement intent predictor."""

from .labels import LabelParams, confidence_weight, make_label
from .network import IntentModel
from .serial import load_model, save_model
from .train import TrainConfig, TrainingSequence, sequence_loss, train
from .evaluate import EvalReport, TrajectoryEval, evaluate

__all__ = [
    "LabelParams",
    "confidence_weight",
    "make_label",
    "IntentModel",
    "TrainConfig",
    "TrainingSequence",
    "sequence_loss",
    "train",
    "evaluate",
    "EvalReport",
    "TrajectoryEval",
    "save_model",
    "load_model",
]
