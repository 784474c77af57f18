"""Audio-visual transformer with cross-modal fusion and two output resolutions."""

from __future__ import annotations

from typing import Literal

import numpy as np

from avasr.data.batching import Batch
from avasr.exceptions import ConfigurationError, ContractError
from avasr.models import AVASRConfig
from avasr.nn import (
    Decoder,
    Dropout,
    Embedding,
    Encoder,
    Linear,
    Module,
    MultiHeadAttention,
    Parameter,
    sinusoidal_positions,
)
from avasr.tensor import Tensor, ops


Resolution = Literal["char", "subword"]


class AVASRModel(Module):
    """Audio encoder, video encoder, alpha-weighted cross-modal fusion and a
    decoder shared by the character and subword heads.

    Audio and video each get their own input projection into ``d_model``,
    followed by one feed-forward layer whose weights are shared by both
    paths. The fused memory is ``audio + alpha * CrossAttn(Q=audio, K=V=video)``.

    Args:
        config: Network hyperparameters
        seed: Seed of the generator used for initialization and dropout
    """

    def __init__(self, config: AVASRConfig, seed: int = 0):
        super().__init__()
        self.config = config
        self.rng = np.random.default_rng(seed)
        rng = self.rng
        d = config.d_model
        scaled = config.attention_scaling

        self.audio_proj = Linear(config.audio_dim, d, rng)
        self.video_proj = Linear(config.video_dim, d, rng)
        self.tied_ff = Linear(d, d, rng)
        self.audio_encoder = Encoder(
            config.enc_layers, d, config.heads, config.d_ff, config.dropout, rng, scaled
        )
        self.video_encoder = Encoder(
            config.video_layers, d, config.heads, config.d_ff, config.dropout, rng, scaled
        )
        self.cross_attn = MultiHeadAttention(d, config.heads, rng, scaled)
        self.alpha = Parameter(np.array(config.alpha_init))
        self.decoder = Decoder(
            config.dec_layers, d, config.heads, config.d_ff, config.dropout, rng, scaled
        )
        self.char_embed = Embedding(config.char_vocab_size, d, rng)
        self.subword_embed = Embedding(config.subword_vocab_size, d, rng)
        self.char_head = Linear(d, config.char_vocab_size, rng)
        self.subword_head = Linear(d, config.subword_vocab_size, rng)
        self.dropout = Dropout(config.dropout, rng)

    def _tied(self, x: Tensor) -> Tensor:
        return ops.relu(self.tied_ff(x))

    def _check_width(self, features: Tensor, expected: int, modality: str) -> None:
        if features.ndim != 3 or features.shape[-1] != expected:
            raise ConfigurationError(
                f"{modality} features have shape {features.shape}; the model expects "
                f"[batch, length, {expected}]",
                error_code="FEATURE_DIM_MISMATCH",
                details={"modality": modality, "shape": list(features.shape), "expected": expected},
            )

    def _embed_sequence(self, x: Tensor, with_positions: bool) -> Tensor:
        if self.config.tied_ff_before_positions:
            x = self._tied(x)
            if with_positions:
                x = ops.add(x, sinusoidal_positions(x.shape[1], self.config.d_model))
        else:
            if with_positions:
                x = ops.add(x, sinusoidal_positions(x.shape[1], self.config.d_model))
            x = self._tied(x)
        return self.dropout(x)

    def encode_audio(self, features: Tensor | np.ndarray, pad_mask: np.ndarray) -> Tensor:
        """Project, apply the tied layer, add positions and run the audio encoder.

        Args:
            features: ``[batch, frames, audio_dim]``
            pad_mask: ``[batch, frames]``, True on real frames

        Returns:
            Audio-space encoding ``[batch, frames, d_model]``
        """
        features = ops.as_tensor(features)
        self._check_width(features, self.config.audio_dim, "audio")
        x = self._embed_sequence(self.audio_proj(features), with_positions=True)
        return self.audio_encoder(x, pad_mask)

    def encode_video(self, features: Tensor | np.ndarray) -> Tensor:
        """Project pooled video ``[batch, len, video_dim]`` through the tied layer
        and the video encoder."""
        features = ops.as_tensor(features)
        self._check_width(features, self.config.video_dim, "video")
        x = self._embed_sequence(
            self.video_proj(features), with_positions=self.config.video_positions
        )
        valid = np.ones(x.shape[:2], dtype=bool)
        return self.video_encoder(x, valid)

    def fuse(self, audio_enc: Tensor, video_enc: Tensor, gate_alpha: bool = False) -> Tensor:
        """``audio_enc + alpha * CrossAttn(Q=audio_enc, K=V=video_enc)``.

        With fusion disabled or ``gate_alpha`` set the audio encoding is
        returned unchanged.
        """
        if not self.config.fusion_enabled or gate_alpha:
            return audio_enc
        cross = self.cross_attn(audio_enc, video_enc)
        return ops.add(audio_enc, ops.mul(self.alpha, cross))

    def encode(self, batch: Batch) -> Tensor:
        """Fused memory for a batch.

        Raises:
            ContractError: If fusion needs video that the batch lacks.
        """
        audio_enc = self.encode_audio(batch.audio, batch.audio_mask)
        if not self.config.fusion_enabled or batch.gate_alpha:
            return audio_enc
        if batch.video is None or not batch.video_available.all():
            missing = [i for i, ok in zip(batch.ids, batch.video_available) if not ok]
            raise ContractError(
                "Video features are missing and no missing-video mode is set",
                error_code="MISSING_VIDEO",
                details={"ids": missing or list(batch.ids)},
            )
        return self.fuse(audio_enc, self.encode_video(batch.video))

    def _embed_targets(self, ids: np.ndarray, resolution: Resolution) -> Tensor:
        table = self.char_embed if resolution == "char" else self.subword_embed
        x = ops.scale(table(ids), float(np.sqrt(self.config.d_model)))
        x = ops.add(x, sinusoidal_positions(x.shape[1], self.config.d_model))
        return self.dropout(x)

    def decode_logits(
        self,
        memory: Tensor,
        memory_valid: np.ndarray,
        inputs: np.ndarray,
        input_valid: np.ndarray,
        resolution: Resolution,
    ) -> Tensor:
        """Run the shared decoder over one resolution's targets.

        Returns:
            Logits ``[batch, len, vocab]`` of that resolution's head
        """
        hidden = self.decoder(
            self._embed_targets(inputs, resolution), memory, input_valid, memory_valid
        )
        head = self.char_head if resolution == "char" else self.subword_head
        return head(hidden)

    def forward(self, batch: Batch) -> tuple[Tensor, Tensor]:
        """Teacher-forced logits for both resolutions over one fused memory.

        Raises:
            ContractError: If either target sequence is missing.
        """
        for name, targets in (("char", batch.char_targets), ("subword", batch.subword_targets)):
            if targets is None or targets.ndim != 2 or targets.shape[1] < 2:
                raise ContractError(
                    f"Batch lacks framed {name} targets",
                    error_code="MISSING_TARGETS",
                    details={"resolution": name},
                )
        memory = self.encode(batch)
        outputs = []
        for resolution in ("char", "subword"):
            inputs, _, valid = batch.teacher_forcing(resolution)
            outputs.append(
                self.decode_logits(memory, batch.audio_mask, inputs, valid, resolution)
            )
        return outputs[0], outputs[1]

    __call__ = forward

    def next_token_logprobs(
        self,
        memory: Tensor,
        memory_valid: np.ndarray,
        prefixes: np.ndarray,
        resolution: Resolution,
    ) -> np.ndarray:
        """Log-probabilities of the token after each prefix.

        Args:
            memory: Fused memory ``[1, frames, d_model]`` of one utterance
            memory_valid: ``[1, frames]``
            prefixes: ``[n, len]`` BOS-prefixed token ids

        Returns:
            ``[n, vocab]`` array
        """
        n = prefixes.shape[0]
        memory_n = Tensor(np.repeat(memory.data, n, axis=0), dtype=memory.dtype)
        valid_n = np.repeat(memory_valid, n, axis=0)
        logits = self.decode_logits(
            memory_n, valid_n, prefixes, np.ones(prefixes.shape, dtype=bool), resolution
        )
        return ops.log_softmax(ops.narrow(logits, -1, axis=1), axis=-1).data[:, 0, :]


def _linear(i: int, o: int) -> int:
    return i * o + o


def parameter_count(config: AVASRConfig) -> int:
    """Closed-form number of scalars in :class:`AVASRModel` for ``config``."""
    d, ff = config.d_model, config.d_ff
    norm = 2 * d
    attention = 4 * _linear(d, d)
    feed_forward = _linear(d, ff) + _linear(ff, d)
    enc_layer = 2 * norm + attention + feed_forward
    dec_layer = 3 * norm + 2 * attention + feed_forward
    return (
        _linear(config.audio_dim, d)
        + _linear(config.video_dim, d)
        + _linear(d, d)
        + config.enc_layers * enc_layer + norm
        + config.video_layers * enc_layer + norm
        + attention
        + 1
        + config.dec_layers * dec_layer + norm
        + (config.char_vocab_size + config.subword_vocab_size) * d
        + _linear(d, config.char_vocab_size)
        + _linear(d, config.subword_vocab_size)
    )
