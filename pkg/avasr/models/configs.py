"""Validated configuration models."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


SPECIAL_TOKENS = 4  # PAD, BOS, EOS, UNK


class AVASRConfig(BaseModel):
    """Network hyperparameters.

    Attributes:
        d_model: Transformer width
        heads: Attention heads in every attention layer
        enc_layers: Audio encoder depth
        video_enc_layers: Video encoder depth (None = same as enc_layers)
        dec_layers: Shared decoder depth
        d_ff: Feed-forward inner width
        dropout: Dropout rate (train mode only)
        feature_dim: Raw acoustic feature width (40 filterbank + 3 pitch)
        stack_factor: Frames stacked into one input vector
        video_dim: Pooled video feature width
        char_vocab_size: Character vocabulary size including specials
        subword_vocab_size: Subword vocabulary size including specials
        attention_scaling: Divide scores by sqrt(d_head)
        fusion_enabled: Add the cross-modal attention output to the audio encoding
        tied_ff_before_positions: Apply the tied layer before adding positions
        video_positions: Add positional encodings to the video sequence
        alpha_init: Initial value of the fusion weight
    """

    model_config = ConfigDict(frozen=True)

    d_model: int = Field(default=480, gt=0)
    heads: int = Field(default=6, gt=0)
    enc_layers: int = Field(default=6, gt=0)
    video_enc_layers: int | None = Field(default=None, ge=0)
    dec_layers: int = Field(default=4, gt=0)
    d_ff: int = Field(default=1920, gt=0)
    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    feature_dim: int = Field(default=43, gt=0)
    stack_factor: int = Field(default=4, gt=0)
    video_dim: int = Field(default=2048, gt=0)
    char_vocab_size: int = Field(default=41 + SPECIAL_TOKENS, gt=SPECIAL_TOKENS)
    subword_vocab_size: int = Field(default=1200 + SPECIAL_TOKENS, gt=SPECIAL_TOKENS)
    attention_scaling: bool = True
    fusion_enabled: bool = True
    tied_ff_before_positions: bool = True
    video_positions: bool = False
    alpha_init: float = 0.0

    @model_validator(mode="after")
    def _check_heads(self) -> AVASRConfig:
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model={self.d_model} must be divisible by heads={self.heads}")
        return self

    @property
    def audio_dim(self) -> int:
        return self.feature_dim * self.stack_factor

    @property
    def video_layers(self) -> int:
        return self.enc_layers if self.video_enc_layers is None else self.video_enc_layers


class TrainConfig(BaseModel):
    """Optimization and early-stopping settings."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=0.5, ge=0.0, le=1.0)
    label_smoothing: float = Field(default=0.1, ge=0.0, lt=1.0)
    base_lr: float = Field(default=1e-3, gt=0.0)
    warmup_steps: int = Field(default=8000, ge=1)
    schedule: Literal["warmup_inv_sqrt", "constant"] = "warmup_inv_sqrt"
    max_epochs: int = Field(default=200, ge=1)
    max_steps: int | None = Field(default=None, ge=1)
    patience: int = Field(default=10, ge=1)
    clip_norm: float | None = Field(default=5.0, gt=0.0)
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.98, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-9, gt=0.0)
    seed: int = Field(default=0, ge=0)
    shuffle_seed: int | None = Field(default=None, ge=0)
    precision: Literal["float32", "float64"] = "float32"
    checkpoint_dir: Path = Path("runs")

    @property
    def effective_shuffle_seed(self) -> int:
        return self.seed if self.shuffle_seed is None else self.shuffle_seed


class DataConfig(BaseModel):
    """Ingestion, preprocessing and batching settings."""

    model_config = ConfigDict(frozen=True)

    max_seconds: float = Field(default=15.0, gt=0.0)
    batch_size_frames: int = Field(default=2000, gt=0)
    frame_step_s: float = Field(default=0.01, gt=0.0)
    skip_invalid: bool = False
    enable_cache: bool = False
    cache_size: int = Field(default=1024, gt=0)
    workers: int = Field(default=4, ge=1)


class DecodeConfig(BaseModel):
    """Beam search and evaluation settings."""

    model_config = ConfigDict(frozen=True)

    beam_size: int = Field(default=5, ge=1)
    length_penalty: float = Field(default=0.7, ge=0.0)
    length_penalty_kind: Literal["power", "gnmt"] = "power"
    max_decode_len: int = Field(default=200, ge=1)
    resolution: Literal["subword", "char"] = "subword"
    missing_sigma: float = Field(default=0.2, ge=0.0)
    greedy_floor: bool = True
    decode_workers: int = Field(default=1, ge=1)
