"""Losses, optimizer and the training loop."""

from avasr.train.losses import BatchLoss, batch_loss, label_smoothed_ce, multiresolution_loss
from avasr.train.loop import (
    BEST_CHECKPOINT,
    LAST_CHECKPOINT,
    METRICS_FILE,
    METRICS_HEADER,
    DevLoss,
    EpochMetrics,
    TrainResult,
    evaluate_loss,
    train_loop,
)
from avasr.train.optim import Adam, clip_grad_norm, lr_schedule

__all__ = [
    # Losses
    "label_smoothed_ce",
    "multiresolution_loss",
    "batch_loss",
    "BatchLoss",
    # Optimization
    "Adam",
    "lr_schedule",
    "clip_grad_norm",
    # Loop
    "train_loop",
    "evaluate_loss",
    "TrainResult",
    "EpochMetrics",
    "DevLoss",
    "METRICS_FILE",
    "METRICS_HEADER",
    "BEST_CHECKPOINT",
    "LAST_CHECKPOINT",
]
