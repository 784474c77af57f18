"""The audio-visual recognizer, missing-video handling and checkpoints."""

from avasr.network.avasr import AVASRModel, parameter_count
from avasr.network.checkpoint import (
    FORMAT_VERSION,
    Checkpoint,
    check_config,
    load_checkpoint,
    load_parameters,
    restore_model,
    save_checkpoint,
)
from avasr.network.missing import MISSING_VIDEO_MODES, apply_missing_video_mode

__all__ = [
    "AVASRModel",
    "parameter_count",
    "apply_missing_video_mode",
    "MISSING_VIDEO_MODES",
    "Checkpoint",
    "FORMAT_VERSION",
    "save_checkpoint",
    "load_checkpoint",
    "load_parameters",
    "restore_model",
    "check_config",
]
