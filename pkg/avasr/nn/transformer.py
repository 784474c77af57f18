"""Positional encodings, masks and pre-norm encoder/decoder layers."""

from __future__ import annotations

import numpy as np

from avasr.exceptions import ContractError, DimensionError
from avasr.nn.attention import MultiHeadAttention
from avasr.nn.layers import Dropout, FeedForward, LayerNorm
from avasr.nn.module import Module
from avasr.tensor import Tensor, get_default_dtype, ops


def sinusoidal_positions(length: int, d_model: int) -> Tensor:
    """Fixed table: even columns ``sin(p / 10000^(2i/d))``, odd columns ``cos``."""
    if length < 1 or d_model < 1:
        raise ContractError(
            f"positions need length, d_model >= 1, got {length}, {d_model}",
            error_code="INVALID_POSITIONS",
        )
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = 1.0 / np.power(10000.0, np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    angles = positions * rates[None, :]
    table = np.zeros((length, d_model), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : d_model // 2])
    return Tensor(table, dtype=get_default_dtype())


def key_mask(valid: np.ndarray, len_q: int) -> np.ndarray:
    """``[batch, len_kv]`` validity -> ``[batch, len_q, len_kv]`` attention mask."""
    valid = np.asarray(valid, dtype=bool)
    return np.broadcast_to(valid[:, None, :], (valid.shape[0], len_q, valid.shape[1])).copy()


def causal_mask(valid: np.ndarray) -> np.ndarray:
    """Position i attends to j <= i among non-padding targets."""
    valid = np.asarray(valid, dtype=bool)
    length = valid.shape[1]
    lower = np.tril(np.ones((length, length), dtype=bool))
    return lower[None, :, :] & valid[:, None, :]


def _check_mask(x: Tensor, valid: np.ndarray) -> None:
    if valid.shape != x.shape[:2]:
        raise DimensionError(
            f"padding mask {valid.shape} does not match sequence {x.shape}",
            details={"mask": list(valid.shape), "sequence": list(x.shape)},
        )


class EncoderLayer(Module):
    """Pre-norm block: norm -> self-attention -> dropout -> add, then the same with FF."""

    def __init__(
        self,
        d_model: int,
        heads: int,
        d_ff: int,
        dropout: float,
        rng: np.random.Generator,
        scaled: bool = True,
    ):
        super().__init__()
        self.norm_attn = LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, heads, rng, scaled)
        self.norm_ff = LayerNorm(d_model)
        self.feed_forward = FeedForward(d_model, d_ff, dropout, rng)
        self.dropout = Dropout(dropout, rng)

    def __call__(self, x: Tensor, pad_mask: np.ndarray) -> Tensor:
        pad_mask = np.asarray(pad_mask, dtype=bool)
        _check_mask(x, pad_mask)
        h = self.norm_attn(x)
        x = ops.add(x, self.dropout(self.self_attn(h, h, key_mask(pad_mask, x.shape[1]))))
        return ops.add(x, self.dropout(self.feed_forward(self.norm_ff(x))))


class DecoderLayer(Module):
    """Pre-norm block with causal self-attention, source attention and FF."""

    def __init__(
        self,
        d_model: int,
        heads: int,
        d_ff: int,
        dropout: float,
        rng: np.random.Generator,
        scaled: bool = True,
    ):
        super().__init__()
        self.norm_self = LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, heads, rng, scaled)
        self.norm_src = LayerNorm(d_model)
        self.src_attn = MultiHeadAttention(d_model, heads, rng, scaled)
        self.norm_ff = LayerNorm(d_model)
        self.feed_forward = FeedForward(d_model, d_ff, dropout, rng)
        self.dropout = Dropout(dropout, rng)

    def __call__(
        self,
        y: Tensor,
        memory: Tensor,
        self_mask: np.ndarray,
        mem_mask: np.ndarray,
    ) -> Tensor:
        h = self.norm_self(y)
        y = ops.add(y, self.dropout(self.self_attn(h, h, self_mask)))
        h = self.norm_src(y)
        y = ops.add(y, self.dropout(self.src_attn(h, memory, mem_mask)))
        return ops.add(y, self.dropout(self.feed_forward(self.norm_ff(y))))


class Encoder(Module):
    """Stack of encoder layers followed by a final layer norm."""

    def __init__(
        self,
        num_layers: int,
        d_model: int,
        heads: int,
        d_ff: int,
        dropout: float,
        rng: np.random.Generator,
        scaled: bool = True,
    ):
        super().__init__()
        self.layers = [
            EncoderLayer(d_model, heads, d_ff, dropout, rng, scaled) for _ in range(num_layers)
        ]
        self.norm = LayerNorm(d_model)

    def __call__(self, x: Tensor, pad_mask: np.ndarray) -> Tensor:
        for layer in self.layers:
            x = layer(x, pad_mask)
        return self.norm(x)


class Decoder(Module):
    """Stack of decoder layers followed by a final layer norm."""

    def __init__(
        self,
        num_layers: int,
        d_model: int,
        heads: int,
        d_ff: int,
        dropout: float,
        rng: np.random.Generator,
        scaled: bool = True,
    ):
        super().__init__()
        self.layers = [
            DecoderLayer(d_model, heads, d_ff, dropout, rng, scaled) for _ in range(num_layers)
        ]
        self.norm = LayerNorm(d_model)

    def __call__(
        self,
        y: Tensor,
        memory: Tensor,
        target_valid: np.ndarray,
        memory_valid: np.ndarray,
    ) -> Tensor:
        target_valid = np.asarray(target_valid, dtype=bool)
        memory_valid = np.asarray(memory_valid, dtype=bool)
        _check_mask(y, target_valid)
        _check_mask(memory, memory_valid)
        self_mask = causal_mask(target_valid)
        mem_mask = key_mask(memory_valid, y.shape[1])
        for layer in self.layers:
            y = layer(y, memory, self_mask, mem_mask)
        return self.norm(y)
