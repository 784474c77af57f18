"""Inference-time handling of absent video input."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from avasr.data.batching import Batch
from avasr.exceptions import ConfigurationError


MISSING_VIDEO_MODES = ("zeros", "gaussian", "gate_alpha")


def apply_missing_video_mode(
    batch: Batch,
    mode: str,
    sigma: float = 0.2,
    rng: np.random.Generator | None = None,
    video_dim: int | None = None,
    video_len: int = 1,
) -> Batch:
    """Replace the batch's video input for audio-only evaluation.

    Args:
        batch: Batch to transform (left untouched)
        mode: ``zeros`` (all-zero vectors), ``gaussian`` (iid N(0, sigma^2)
            draws) or ``gate_alpha`` (alpha forced to 0 for the forward pass)
        sigma: Standard deviation for ``gaussian``
        rng: Generator for ``gaussian``
        video_dim: Video width, needed when the batch carries no video
        video_len: Video sequence length, used with ``video_dim``

    Raises:
        ConfigurationError: For an unknown mode, or when the video shape
            cannot be determined.
    """
    if mode not in MISSING_VIDEO_MODES:
        raise ConfigurationError(
            f"Unknown missing-video mode: {mode}",
            error_code="INVALID_MISSING_MODE",
            details={"mode": mode, "allowed": list(MISSING_VIDEO_MODES)},
        )
    if mode == "gate_alpha":
        return replace(batch, gate_alpha=True)

    if batch.video is not None:
        shape = batch.video.shape
    elif video_dim is not None:
        shape = (len(batch), video_len, video_dim)
    else:
        raise ConfigurationError(
            "video_dim is required when the batch has no video",
            error_code="UNKNOWN_VIDEO_SHAPE",
        )

    if mode == "zeros":
        video = np.zeros(shape, dtype=np.float32)
    else:
        rng = rng if rng is not None else np.random.default_rng()
        video = rng.normal(0.0, sigma, size=shape).astype(np.float32)
    return replace(batch, video=video, video_available=np.ones(len(batch), dtype=bool))
