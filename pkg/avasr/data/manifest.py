"""Tab-separated utterance manifests.

Each line holds ``id, audio_path, video_path_or_dash, duration_s, transcript``
and an optional sixth field of chunk spans ``s0:e0:text0|s1:e1:text1``.
A seventh field, present only when it differs from 0.01, holds the
seconds per feature row (the sixth is then empty when there are no spans).
Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

import pydantic

from avasr.exceptions import IngestionError, ValidationError
from avasr.models import ChunkSpan, UtteranceRecord


logger = logging.getLogger(__name__)

NO_VIDEO = "-"
DEFAULT_FRAME_STEP_S = UtteranceRecord.model_fields["frame_step_s"].default


def parse_spans(field: str) -> list[ChunkSpan]:
    spans = []
    for item in field.split("|"):
        start, end, text = item.split(":", 2)
        spans.append(ChunkSpan(start_frame=int(start), end_frame=int(end), text=text))
    return spans


def format_spans(spans: Sequence[ChunkSpan]) -> str:
    return "|".join(f"{s.start_frame}:{s.end_frame}:{s.text}" for s in spans)


def validate_spans(spans: Sequence[ChunkSpan], n_frames: int | None = None) -> None:
    """Check spans are ordered, disjoint and (when known) inside the matrix.

    Raises:
        ValidationError: On overlap, disorder or out-of-bounds spans.
    """
    previous_end = 0
    for i, span in enumerate(spans):
        if span.start_frame < previous_end:
            raise ValidationError(
                f"chunk span {i} [{span.start_frame}, {span.end_frame}) overlaps "
                f"or precedes the previous span ending at {previous_end}",
                error_code="OVERLAPPING_SPANS",
                details={"span": i},
            )
        if n_frames is not None and span.end_frame > n_frames:
            raise ValidationError(
                f"chunk span {i} ends at {span.end_frame} beyond {n_frames} frames",
                error_code="SPAN_OUT_OF_BOUNDS",
                details={"span": i, "frames": n_frames},
            )
        previous_end = span.end_frame


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _parse_line(line: str, base: Path) -> UtteranceRecord:
    fields = line.split("\t")
    if len(fields) not in (5, 6, 7):
        raise ValueError(f"expected 5 to 7 tab-separated fields, got {len(fields)}")
    utt_id, audio, video, duration, transcript = fields[:5]
    spans = parse_spans(fields[5]) if len(fields) >= 6 and fields[5] else None
    frame_step_s = float(fields[6]) if len(fields) == 7 else DEFAULT_FRAME_STEP_S
    if spans:
        validate_spans(spans)
    return UtteranceRecord(
        id=utt_id,
        audio_path=_resolve(base, audio),
        video_path=None if video == NO_VIDEO else _resolve(base, video),
        transcript=transcript,
        duration_s=float(duration),
        chunk_spans=spans,
        frame_step_s=frame_step_s,
    )


def load_manifest(
    path: Path,
    skip_invalid: bool = False,
    check_files: bool = True,
) -> list[UtteranceRecord]:
    """Load and validate a manifest.

    Args:
        path: Manifest file
        skip_invalid: Log and skip bad lines instead of failing fast
        check_files: Require referenced feature files to exist

    Returns:
        Records in file order

    Raises:
        IngestionError: On a malformed line (with its line number) or a
            missing feature file (with the record id)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IngestionError(
            f"Cannot read manifest {path}: {e}",
            error_code="MANIFEST_READ_ERROR",
            details={"path": str(path)},
        ) from e

    base = path.parent
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            try:
                record = _parse_line(line, base)
            except (ValueError, pydantic.ValidationError, ValidationError) as e:
                raise IngestionError(
                    f"{path}:{lineno}: malformed manifest line: {e}",
                    error_code="MALFORMED_LINE",
                    details={"path": str(path), "line": lineno},
                ) from e
            if record.id in seen:
                raise IngestionError(
                    f"{path}:{lineno}: duplicate utterance id {record.id}",
                    error_code="DUPLICATE_ID",
                    details={"path": str(path), "line": lineno, "id": record.id},
                )
            if check_files:
                _check_files(record, lineno)
        except IngestionError as e:
            if not skip_invalid:
                raise
            logger.warning("Skipping manifest line: %s", e)
            continue
        seen.add(record.id)
        records.append(record)

    if not records:
        logger.warning("Manifest %s holds no records", path)
    else:
        logger.info("Loaded %d records from %s", len(records), path)
    return records


def _check_files(record: UtteranceRecord, lineno: int) -> None:
    if not record.audio_path.exists():
        raise IngestionError(
            f"Audio features for {record.id} not found: {record.audio_path}",
            error_code="MISSING_AUDIO",
            details={"id": record.id, "line": lineno, "path": str(record.audio_path)},
        )
    if record.video_path is not None and not record.video_path.exists():
        raise IngestionError(
            f"Video features for {record.id} not found: {record.video_path}",
            error_code="MISSING_VIDEO",
            details={"id": record.id, "line": lineno, "path": str(record.video_path)},
        )


def format_record(record: UtteranceRecord) -> str:
    fields = [
        record.id,
        str(record.audio_path),
        NO_VIDEO if record.video_path is None else str(record.video_path),
        repr(record.duration_s),
        record.transcript,
    ]
    spans = format_spans(record.chunk_spans) if record.chunk_spans else ""
    if record.frame_step_s != DEFAULT_FRAME_STEP_S:
        fields += [spans, repr(record.frame_step_s)]
    elif spans:
        fields.append(spans)
    return "\t".join(fields)


def serialize_manifest(records: Iterable[UtteranceRecord], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(format_record(r) + "\n" for r in records), encoding="utf-8")
