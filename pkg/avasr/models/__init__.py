"""Data models for AVASR."""

from avasr.models.configs import (
    SPECIAL_TOKENS,
    AVASRConfig,
    DataConfig,
    DecodeConfig,
    TrainConfig,
)
from avasr.models.records import ChunkSpan, UtteranceRecord
from avasr.models.report import EvalReport, UtteranceResult

__all__ = [
    "SPECIAL_TOKENS",
    "AVASRConfig",
    "TrainConfig",
    "DataConfig",
    "DecodeConfig",
    "ChunkSpan",
    "UtteranceRecord",
    "EvalReport",
    "UtteranceResult",
]
