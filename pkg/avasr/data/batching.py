"""Batch assembly: feature loading, length bucketing, padding and masking."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from avasr.data.features import read_features
from avasr.data.preprocess import stack_frames
from avasr.exceptions import AVASRError, ConfigurationError, DimensionError, IngestionError
from avasr.models import UtteranceRecord
from avasr.tokenizer import BOS_ID, EOS_ID, PAD_ID, BpeModel, CharVocab, normalize


logger = logging.getLogger(__name__)

Resolution = Literal["char", "subword"]
FeatureReader = Callable[[Path], np.ndarray]


@dataclass(frozen=True)
class Example:
    """One utterance ready for collation.

    Attributes:
        id: Utterance id
        audio: Stacked features ``[frames, audio_dim]``
        video: Video features ``[video_len, video_dim]`` or None
        char_ids: Character targets framed as BOS ... EOS
        subword_ids: Subword targets framed as BOS ... EOS
        reference: Normalized transcript
    """

    id: str
    audio: np.ndarray
    video: np.ndarray | None
    char_ids: list[int]
    subword_ids: list[int]
    reference: str

    @property
    def frames(self) -> int:
        return int(self.audio.shape[0])


@dataclass(frozen=True)
class Batch:
    """Padded tensors for a group of utterances.

    Masks are True on real positions. ``video`` is None when no utterance in
    the batch has video; otherwise missing rows are zeros with
    ``video_available`` False.
    """

    ids: list[str]
    audio: np.ndarray
    audio_mask: np.ndarray
    video: np.ndarray | None
    video_available: np.ndarray
    char_targets: np.ndarray
    char_mask: np.ndarray
    subword_targets: np.ndarray
    subword_mask: np.ndarray
    references: list[str]
    gate_alpha: bool = False

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def lengths(self) -> np.ndarray:
        return self.audio_mask.sum(axis=1)

    @property
    def real_frames(self) -> int:
        return int(self.audio_mask.sum())

    @property
    def padding_frames(self) -> int:
        return int(self.audio_mask.size - self.audio_mask.sum())

    def targets(self, resolution: Resolution) -> tuple[np.ndarray, np.ndarray]:
        if resolution == "char":
            return self.char_targets, self.char_mask
        return self.subword_targets, self.subword_mask

    def teacher_forcing(self, resolution: Resolution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split framed targets into decoder inputs and next-token outputs.

        Returns:
            ``(inputs, outputs, mask)`` where ``mask`` marks positions whose
            output token is real; it doubles as the decoder input mask.
        """
        ids, mask = self.targets(resolution)
        return ids[:, :-1], ids[:, 1:], mask[:, 1:]

    def subset(self, rows: Sequence[int]) -> Batch:
        """Batch restricted to ``rows``, re-trimmed to its own max lengths."""
        rows = list(rows)
        t = int(self.audio_mask[rows].sum(axis=1).max())
        lc = int(self.char_mask[rows].sum(axis=1).max())
        ls = int(self.subword_mask[rows].sum(axis=1).max())
        return replace(
            self,
            ids=[self.ids[i] for i in rows],
            audio=self.audio[rows, :t],
            audio_mask=self.audio_mask[rows, :t],
            video=None if self.video is None else self.video[rows],
            video_available=self.video_available[rows],
            char_targets=self.char_targets[rows, :lc],
            char_mask=self.char_mask[rows, :lc],
            subword_targets=self.subword_targets[rows, :ls],
            subword_mask=self.subword_mask[rows, :ls],
            references=[self.references[i] for i in rows],
        )


def frame_targets(ids: Sequence[int]) -> list[int]:
    return [BOS_ID, *ids, EOS_ID]


def _prepare_audio(
    record: UtteranceRecord,
    raw: np.ndarray,
    feature_dim: int,
    stack_factor: int,
    frame_step_s: float,
) -> np.ndarray:
    cols = raw.shape[1]
    if cols == feature_dim:
        frames_per_row = 1
        audio = stack_frames(raw, stack_factor)
    elif cols == feature_dim * stack_factor:
        frames_per_row = stack_factor
        audio = raw
    else:
        raise ConfigurationError(
            f"Features for {record.id} have {cols} columns; expected {feature_dim} "
            f"or {feature_dim * stack_factor}",
            error_code="FEATURE_DIM_MISMATCH",
            details={"id": record.id, "cols": cols},
        )
    row_s = frames_per_row * frame_step_s
    if abs(record.duration_s - raw.shape[0] * row_s) > row_s + 1e-6:
        raise IngestionError(
            f"Duration of {record.id} ({record.duration_s}s) disagrees with "
            f"{raw.shape[0]} feature rows",
            error_code="DURATION_MISMATCH",
            details={"id": record.id, "rows": int(raw.shape[0])},
        )
    return audio


def load_example(
    record: UtteranceRecord,
    char_vocab: CharVocab,
    bpe: BpeModel,
    feature_dim: int = 43,
    stack_factor: int = 4,
    video_dim: int = 2048,
    frame_step_s: float = 0.01,
    reader: FeatureReader = read_features,
) -> Example:
    """Read, stack and tokenize one record.

    Raises:
        IngestionError: If a file cannot be read (the id is attached)
        ConfigurationError: If a feature width does not fit the model
    """
    try:
        audio = _prepare_audio(
            record, reader(record.audio_path), feature_dim, stack_factor, frame_step_s
        )
        video = None
        if record.video_path is not None:
            video = reader(record.video_path)
            if video.shape[1] != video_dim:
                raise ConfigurationError(
                    f"Video features for {record.id} have {video.shape[1]} columns, "
                    f"expected {video_dim}",
                    error_code="VIDEO_DIM_MISMATCH",
                    details={"id": record.id},
                )
    except IngestionError as e:
        if "id" not in e.details:
            e.details["id"] = record.id
            e.message = f"{record.id}: {e.message}"
        raise

    text = normalize(record.transcript)
    return Example(
        id=record.id,
        audio=audio,
        video=video,
        char_ids=frame_targets(char_vocab.encode(text)),
        subword_ids=frame_targets(bpe.encode(text)),
        reference=text,
    )


def load_examples(
    records: Sequence[UtteranceRecord],
    char_vocab: CharVocab,
    bpe: BpeModel,
    workers: int = 1,
    **kwargs,
) -> list[Example]:
    """Load records in parallel; the result keeps the input order."""

    def load(record: UtteranceRecord) -> Example:
        return load_example(record, char_vocab, bpe, **kwargs)

    if workers <= 1:
        return [load(r) for r in records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(load, records))


def plan_batches(
    examples: Sequence[Example], batch_size_frames: int, shuffle_seed: int = 0
) -> list[list[Example]]:
    """Bucket examples by length under a padded-frame budget.

    Examples are sorted by length and packed while ``longest * count`` stays
    within ``batch_size_frames``; the resulting batch order is shuffled with
    ``shuffle_seed``.

    Raises:
        IngestionError: If a single utterance exceeds the budget.
    """
    for ex in examples:
        if ex.frames > batch_size_frames:
            raise IngestionError(
                f"Utterance {ex.id} has {ex.frames} frames, over the batch budget "
                f"of {batch_size_frames}; filter, chunk or stack it first",
                error_code="OVER_FRAME_BUDGET",
                details={"id": ex.id, "frames": ex.frames},
            )

    groups: list[list[Example]] = []
    group: list[Example] = []
    for ex in sorted(examples, key=lambda e: (e.frames, e.id)):
        if group and ex.frames * (len(group) + 1) > batch_size_frames:
            groups.append(group)
            group = []
        group.append(ex)
    if group:
        groups.append(group)

    order = np.random.default_rng(shuffle_seed).permutation(len(groups))
    return [groups[i] for i in order]


def _pad_ids(sequences: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(s) for s in sequences)
    ids = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(sequences), width), dtype=bool)
    for i, seq in enumerate(sequences):
        ids[i, : len(seq)] = seq
        mask[i, : len(seq)] = True
    return ids, mask


def collate(examples: Sequence[Example]) -> Batch:
    """Pad a group of examples into a :class:`Batch`."""
    if not examples:
        raise AVASRError("Cannot collate an empty group", error_code="EMPTY_BATCH")
    n = len(examples)
    longest = max(ex.frames for ex in examples)
    audio_dim = examples[0].audio.shape[1]
    audio = np.zeros((n, longest, audio_dim), dtype=np.float32)
    audio_mask = np.zeros((n, longest), dtype=bool)
    for i, ex in enumerate(examples):
        audio[i, : ex.frames] = ex.audio
        audio_mask[i, : ex.frames] = True

    available = np.array([ex.video is not None for ex in examples], dtype=bool)
    video = None
    if available.any():
        shapes = {ex.video.shape for ex in examples if ex.video is not None}
        if len(shapes) != 1:
            raise DimensionError(
                f"Video features in one batch must share a shape, got {sorted(shapes)}",
                details={"ids": [ex.id for ex in examples]},
            )
        (shape,) = shapes
        video = np.zeros((n, *shape), dtype=np.float32)
        for i, ex in enumerate(examples):
            if ex.video is not None:
                video[i] = ex.video

    char_targets, char_mask = _pad_ids([ex.char_ids for ex in examples])
    subword_targets, subword_mask = _pad_ids([ex.subword_ids for ex in examples])
    return Batch(
        ids=[ex.id for ex in examples],
        audio=audio,
        audio_mask=audio_mask,
        video=video,
        video_available=available,
        char_targets=char_targets,
        char_mask=char_mask,
        subword_targets=subword_targets,
        subword_mask=subword_mask,
        references=[ex.reference for ex in examples],
    )


def batch_examples(
    examples: Sequence[Example], batch_size_frames: int, shuffle_seed: int = 0
) -> Iterator[Batch]:
    for group in plan_batches(examples, batch_size_frames, shuffle_seed):
        yield collate(group)


def make_batches(
    records: Sequence[UtteranceRecord],
    char_vocab: CharVocab,
    bpe: BpeModel,
    batch_size_frames: int,
    shuffle_seed: int = 0,
    workers: int = 1,
    **kwargs,
) -> Iterator[Batch]:
    """Load, tokenize and batch records.

    Args:
        records: Preprocessed records
        char_vocab: Character tokenizer
        bpe: Subword tokenizer
        batch_size_frames: Padded-frame budget per batch
        shuffle_seed: Seed of the batch order
        workers: Feature-reading threads
        **kwargs: Forwarded to :func:`load_example`

    Yields:
        Batches in a deterministic order for a fixed seed
    """
    examples = load_examples(records, char_vocab, bpe, workers=workers, **kwargs)
    logger.debug("Batching %d examples, budget=%d frames", len(examples), batch_size_frames)
    yield from batch_examples(examples, batch_size_frames, shuffle_seed)
