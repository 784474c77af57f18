"""Label-smoothed cross-entropy and the character/subword mixture."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from avasr.exceptions import ConfigurationError, ContractError, DimensionError
from avasr.tensor import Tensor, ops

if TYPE_CHECKING:
    from avasr.data import Batch
    from avasr.network import AVASRModel


def label_smoothed_ce(
    logits: Tensor,
    targets: np.ndarray,
    mask: np.ndarray,
    smoothing: float = 0.1,
) -> Tensor:
    """Cross-entropy against a smoothed target, averaged over unmasked tokens.

    The target puts ``1 - smoothing`` on the gold id and
    ``smoothing / (V - 1)`` on every other id.

    Args:
        logits: ``[batch, len, V]``
        targets: ``[batch, len]`` ids in ``[0, V)``
        mask: ``[batch, len]``, True on tokens that count
        smoothing: Label smoothing in ``[0, 1)``

    Raises:
        ContractError: If every token is masked.
        DimensionError: If shapes disagree or ids fall outside the vocabulary.
    """
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    vocab = logits.shape[-1]
    if logits.shape[:-1] != targets.shape or targets.shape != mask.shape:
        raise DimensionError(
            f"logits {logits.shape}, targets {targets.shape} and mask {mask.shape} disagree",
            details={
                "logits": list(logits.shape),
                "targets": list(targets.shape),
                "mask": list(mask.shape),
            },
        )
    if not mask.any():
        raise ContractError("Loss over a batch with no unmasked token", error_code="ALL_MASKED")
    if targets.min() < 0 or targets.max() >= vocab:
        raise DimensionError(
            f"target ids outside [0, {vocab})",
            details={"min": int(targets.min()), "max": int(targets.max()), "vocab": vocab},
        )

    off = smoothing / (vocab - 1) if vocab > 1 else 0.0
    smoothed = np.full((*targets.shape, vocab), off, dtype=logits.dtype)
    np.put_along_axis(smoothed, targets[..., None], 1.0 - smoothing, axis=-1)

    target = Tensor(smoothed, dtype=logits.dtype)
    token_loss = ops.sum(ops.mul(target, ops.log_softmax(logits)), axis=-1)
    weights = Tensor(mask / mask.sum(), dtype=logits.dtype)
    return ops.neg(ops.sum(ops.mul(token_loss, weights)))


def multiresolution_loss(char_loss: Tensor, subword_loss: Tensor, gamma: float) -> Tensor:
    """``gamma * subword_loss + (1 - gamma) * char_loss``.

    Raises:
        ConfigurationError: If ``gamma`` is outside ``[0, 1]``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(
            f"gamma must lie in [0, 1], got {gamma}",
            error_code="INVALID_GAMMA",
            details={"gamma": gamma},
        )
    return ops.add(ops.scale(subword_loss, gamma), ops.scale(char_loss, 1.0 - gamma))


@dataclass(frozen=True)
class BatchLoss:
    total: Tensor
    char: Tensor
    subword: Tensor


def batch_loss(
    model: AVASRModel, batch: Batch, gamma: float, smoothing: float
) -> BatchLoss:
    """Forward ``batch`` and mix both resolutions' losses."""
    char_logits, subword_logits = model.forward(batch)
    _, char_out, char_mask = batch.teacher_forcing("char")
    _, sub_out, sub_mask = batch.teacher_forcing("subword")
    char = label_smoothed_ce(char_logits, char_out, char_mask, smoothing)
    subword = label_smoothed_ce(subword_logits, sub_out, sub_mask, smoothing)
    return BatchLoss(multiresolution_loss(char, subword, gamma), char, subword)
