from .config import DerppConfig, DucaConfig, TrainConfig
from .loop import RunResult, evaluate_accuracy, prediction_log, train_stream
from .methods import (
    METHODS,
    DerppTrainer,
    DucaTrainer,
    ErTrainer,
    JointTrainer,
    LossBreakdown,
    SgdTrainer,
    augment_batch,
    create_trainer,
    shared_losses,
)

__all__ = [
    "METHODS",
    "DerppConfig",
    "DerppTrainer",
    "DucaConfig",
    "DucaTrainer",
    "ErTrainer",
    "JointTrainer",
    "LossBreakdown",
    "RunResult",
    "SgdTrainer",
    "TrainConfig",
    "augment_batch",
    "create_trainer",
    "evaluate_accuracy",
    "prediction_log",
    "shared_losses",
    "train_stream",
]
