"""Transformer building blocks."""

from avasr.nn.attention import (
    AttentionInputs,
    MultiHeadAttention,
    attend,
    scaled_dot_attention,
)
from avasr.nn.layers import Dropout, Embedding, FeedForward, LayerNorm, Linear
from avasr.nn.module import Module, Parameter
from avasr.nn.transformer import (
    Decoder,
    DecoderLayer,
    Encoder,
    EncoderLayer,
    causal_mask,
    key_mask,
    sinusoidal_positions,
)

__all__ = [
    "Module",
    "Parameter",
    "Linear",
    "LayerNorm",
    "Embedding",
    "Dropout",
    "FeedForward",
    "AttentionInputs",
    "attend",
    "scaled_dot_attention",
    "MultiHeadAttention",
    "sinusoidal_positions",
    "key_mask",
    "causal_mask",
    "EncoderLayer",
    "DecoderLayer",
    "Encoder",
    "Decoder",
]
