"""Utterance record models."""

from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ChunkSpan(BaseModel):
    """A sub-utterance located by an external aligner.

    Attributes:
        start_frame: First frame (inclusive)
        end_frame: Last frame (exclusive)
        text: Transcript slice spoken inside the span
    """

    model_config = ConfigDict(frozen=True)

    start_frame: int = Field(ge=0)
    end_frame: int = Field(gt=0)
    text: str

    @model_validator(mode="after")
    def _check_span(self) -> ChunkSpan:
        if self.end_frame <= self.start_frame:
            raise ValueError(
                f"span end {self.end_frame} must exceed start {self.start_frame}"
            )
        if any(sep in self.text for sep in "|\t\n"):
            raise ValueError(f"span text {self.text!r} contains a manifest separator")
        return self


class UtteranceRecord(BaseModel):
    """One sample of the corpus.

    Attributes:
        id: Unique utterance id
        audio_path: Feature matrix file (frames x feature width)
        video_path: Pooled video feature file, or None when absent
        transcript: Reference transcript
        duration_s: Duration in seconds
        chunk_spans: Optional externally aligned chunks
        frame_step_s: Seconds covered by one row of the feature matrix
    """

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    audio_path: Path
    video_path: Path | None = None
    transcript: str
    duration_s: float = Field(ge=0.0)
    chunk_spans: list[ChunkSpan] | None = None
    frame_step_s: float = Field(default=0.01, gt=0.0)

    @property
    def has_video(self) -> bool:
        return self.video_path is not None
