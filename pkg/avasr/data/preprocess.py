"""Input-length strategies: filtering, chunking and frame stacking."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from avasr.data.features import read_features, write_features
from avasr.data.manifest import validate_spans
from avasr.exceptions import ConfigurationError
from avasr.models import UtteranceRecord


logger = logging.getLogger(__name__)

FeatureReader = Callable[[Path], np.ndarray]


def retained_fraction(before: Sequence[UtteranceRecord], after: Sequence[UtteranceRecord]) -> float:
    """Share of total seconds kept; 1.0 for an empty input."""
    total = sum(r.duration_s for r in before)
    if total == 0:
        return 1.0
    return sum(r.duration_s for r in after) / total


def filter_long(
    records: Sequence[UtteranceRecord], max_seconds: float = 15.0
) -> list[UtteranceRecord]:
    """Keep records whose duration is at most ``max_seconds`` (inclusive)."""
    kept = [r for r in records if r.duration_s <= max_seconds]
    logger.info(
        "filter_long max_seconds=%s kept=%d/%d retained_hours_fraction=%.4f",
        max_seconds,
        len(kept),
        len(records),
        retained_fraction(records, kept),
    )
    return kept


def chunk_records(
    records: Sequence[UtteranceRecord],
    out_dir: Path,
    reader: FeatureReader = read_features,
) -> list[UtteranceRecord]:
    """Split records with chunk spans into standalone records.

    Each span's rows are written to ``out_dir/<id>-c<k>.feat`` and become a
    record carrying the span's transcript slice. Records without spans pass
    through unchanged.

    Raises:
        ValidationError: If spans overlap or exceed the feature matrix.
    """
    out: list[UtteranceRecord] = []
    for record in records:
        if not record.chunk_spans:
            out.append(record)
            continue
        features = reader(record.audio_path)
        validate_spans(record.chunk_spans, n_frames=features.shape[0])
        for k, span in enumerate(record.chunk_spans):
            chunk_id = f"{record.id}-c{k}"
            path = Path(out_dir) / f"{chunk_id}.feat"
            write_features(path, features[span.start_frame : span.end_frame])
            out.append(
                record.model_copy(
                    update={
                        "id": chunk_id,
                        "audio_path": path,
                        "transcript": span.text,
                        "duration_s": (span.end_frame - span.start_frame) * record.frame_step_s,
                        "chunk_spans": None,
                    }
                )
            )
    logger.info("chunk_records in=%d out=%d", len(records), len(out))
    return out


def stack_frames(features: np.ndarray, k: int = 4) -> np.ndarray:
    """Concatenate groups of ``k`` consecutive frames feature-wise.

    A trailing partial group is zero-padded, so ``[T, D]`` becomes
    ``[ceil(T / k), D * k]``.
    """
    if k < 1:
        raise ConfigurationError(
            f"stack factor must be >= 1, got {k}", error_code="INVALID_STACK_FACTOR"
        )
    if k == 1:
        return features
    frames, dim = features.shape
    rows = math.ceil(frames / k)
    padded = np.zeros((rows * k, dim), dtype=features.dtype)
    padded[:frames] = features
    return padded.reshape(rows, k * dim)


def unstack_frames(stacked: np.ndarray, k: int, frames: int | None = None) -> np.ndarray:
    """Inverse of :func:`stack_frames`; ``frames`` drops the zero tail."""
    rows, width = stacked.shape
    out = stacked.reshape(rows * k, width // k)
    return out if frames is None else out[:frames]


def stack_records(
    records: Sequence[UtteranceRecord],
    out_dir: Path,
    k: int = 4,
    reader: FeatureReader = read_features,
) -> list[UtteranceRecord]:
    """Write stacked copies of each record's features to ``out_dir``."""
    out = []
    for record in records:
        path = Path(out_dir) / f"{record.id}.feat"
        write_features(path, stack_frames(reader(record.audio_path), k))
        out.append(
            record.model_copy(
                update={
                    "audio_path": path,
                    "frame_step_s": record.frame_step_s * k,
                    "chunk_spans": None,
                }
            )
        )
    logger.info("stack_records k=%d records=%d", k, len(out))
    return out
