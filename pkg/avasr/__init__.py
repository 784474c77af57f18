"""AVASR: audio-visual speech recognition.

Transformer recognizer that fuses scene-level video features into the audio
encoding through cross-modal attention and trains character and subword
outputs jointly.
"""

from avasr.config import Config
from avasr.exceptions import (
    AVASRError,
    ConfigurationError,
    ContractError,
    DecodeError,
    DimensionError,
    IngestionError,
    ValidationError,
    VersionError,
)
from avasr.models import (
    AVASRConfig,
    DataConfig,
    DecodeConfig,
    EvalReport,
    TrainConfig,
    UtteranceRecord,
    UtteranceResult,
)
from avasr.network import AVASRModel
from avasr.pipeline import Pipeline

__version__ = "0.1.0"

__all__ = [
    # Main entry points
    "Pipeline",
    "Config",
    "AVASRModel",
    # Models
    "AVASRConfig",
    "TrainConfig",
    "DataConfig",
    "DecodeConfig",
    "UtteranceRecord",
    "UtteranceResult",
    "EvalReport",
    # Exceptions
    "AVASRError",
    "ConfigurationError",
    "DimensionError",
    "ContractError",
    "IngestionError",
    "ValidationError",
    "VersionError",
    "DecodeError",
]
