"""Scaled dot-product and multi-head attention (self and cross-modal)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from avasr.exceptions import ConfigurationError, ContractError, DimensionError
from avasr.nn.layers import Linear
from avasr.nn.module import Module
from avasr.tensor import Tensor, ops


MASK_BIAS = -1e9


@dataclass(frozen=True)
class AttentionInputs:
    """Keys/values from one sequence, queries from another.

    Shapes: keys and values ``[batch, len_kv, d]``, queries
    ``[batch, len_q, d]``, optional boolean mask ``[batch, len_q, len_kv]``
    (True = attend allowed).
    """

    keys: Tensor
    values: Tensor
    queries: Tensor
    mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        k, v, q = self.keys.shape, self.values.shape, self.queries.shape
        if not (len(k) == len(v) == len(q) == 3):
            raise DimensionError(
                f"attention inputs must be rank 3, got K{k} V{v} Q{q}",
                details={"keys": list(k), "values": list(v), "queries": list(q)},
            )
        if k[:2] != v[:2] or k[0] != q[0] or not (k[2] == v[2] == q[2]):
            raise DimensionError(
                f"attention inputs disagree: K{k} V{v} Q{q}",
                details={"keys": list(k), "values": list(v), "queries": list(q)},
            )
        if self.mask is not None and self.mask.shape != (q[0], q[1], k[1]):
            raise DimensionError(
                f"mask shape {self.mask.shape} does not match scores {(q[0], q[1], k[1])}",
                details={"mask": list(self.mask.shape), "scores": [q[0], q[1], k[1]]},
            )


def attend(
    queries: Tensor,
    keys: Tensor,
    values: Tensor,
    mask: np.ndarray | None = None,
    scaled: bool = True,
) -> tuple[Tensor, Tensor]:
    """``softmax(Q K^T [/ sqrt(d)] + mask_bias) V`` over the trailing two axes.

    Returns the output and the attention weights.
    """
    scores = ops.matmul(queries, ops.transpose(keys))
    if scaled:
        scores = ops.scale(scores, 1.0 / np.sqrt(queries.shape[-1]))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[-1] != keys.shape[-2] or mask.shape[-2] not in (1, queries.shape[-2]):
            raise DimensionError(
                f"mask shape {mask.shape} does not match scores {scores.shape}",
                details={"mask": list(mask.shape), "scores": list(scores.shape)},
            )
        if not mask.any(axis=-1).all():
            raise ContractError(
                "attention row with no allowed key",
                error_code="FULLY_MASKED_ROW",
            )
        bias = np.where(mask, 0.0, MASK_BIAS).astype(scores.dtype)
        scores = ops.add(scores, Tensor(bias, dtype=scores.dtype))
    weights = ops.softmax(scores, axis=-1)
    return ops.matmul(weights, values), weights


def scaled_dot_attention(inputs: AttentionInputs, scaled: bool = True) -> Tensor:
    """Attention output ``[batch, len_q, d]``; every row is a convex mix of V rows."""
    out, _ = attend(inputs.queries, inputs.keys, inputs.values, inputs.mask, scaled)
    return out


class MultiHeadAttention(Module):
    """Projected multi-head attention.

    Self-attention when ``q_src`` and ``kv_src`` are the same tensor;
    cross-modal when keys/values come from the video encoding and queries
    from the audio encoding.
    """

    def __init__(
        self,
        d_model: int,
        heads: int,
        rng: np.random.Generator,
        scaled: bool = True,
    ):
        super().__init__()
        if heads < 1 or d_model % heads != 0:
            raise ConfigurationError(
                f"d_model={d_model} is not divisible by heads={heads}",
                error_code="INVALID_HEADS",
                details={"d_model": d_model, "heads": heads},
            )
        self.d_model = d_model
        self.heads = heads
        self.d_head = d_model // heads
        self.scaled = scaled
        self.w_q = Linear(d_model, d_model, rng)
        self.w_k = Linear(d_model, d_model, rng)
        self.w_v = Linear(d_model, d_model, rng)
        self.w_o = Linear(d_model, d_model, rng)

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        x = ops.reshape(x, (batch, length, self.heads, self.d_head))
        return ops.transpose(x, (0, 2, 1, 3))

    def _merge(self, x: Tensor) -> Tensor:
        batch, _, length, _ = x.shape
        x = ops.transpose(x, (0, 2, 1, 3))
        return ops.reshape(x, (batch, length, self.d_model))

    def __call__(self, q_src: Tensor, kv_src: Tensor, mask: np.ndarray | None = None) -> Tensor:
        return self.forward_with_weights(q_src, kv_src, mask)[0]

    def forward_with_weights(
        self, q_src: Tensor, kv_src: Tensor, mask: np.ndarray | None = None
    ) -> tuple[Tensor, np.ndarray]:
        """Output and per-head distributions ``[batch, heads, queries, keys]``."""
        if q_src.shape[-1] != self.d_model or kv_src.shape[-1] != self.d_model:
            raise DimensionError(
                f"attention expects width {self.d_model}, got Q{q_src.shape} KV{kv_src.shape}",
                details={"queries": list(q_src.shape), "keys": list(kv_src.shape)},
            )
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            expected = (q_src.shape[0], q_src.shape[1], kv_src.shape[1])
            if mask.shape != expected:
                raise DimensionError(
                    f"mask shape {mask.shape} does not match {expected}",
                    details={"mask": list(mask.shape), "expected": list(expected)},
                )
            mask = mask[:, None, :, :]
        q = self._split(self.w_q(q_src))
        k = self._split(self.w_k(kv_src))
        v = self._split(self.w_v(kv_src))
        out, weights = attend(q, k, v, mask, self.scaled)
        return self.w_o(self._merge(out)), weights.data
