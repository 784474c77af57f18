"""Evaluation report models."""

from __future__ import annotations

from pydantic import BaseModel, Field


class UtteranceResult(BaseModel):
    """Scored decode of one utterance.

    Attributes:
        id: Utterance id
        reference: Normalized reference transcript
        hypothesis: Normalized decoded transcript
        wer: Utterance word error rate (inf for an empty reference with output)
        substitutions: Substituted words
        insertions: Inserted words
        deletions: Deleted words
        reference_words: Words in the reference
        truncated: No hypothesis emitted EOS before max length
        error: Failure message when decoding raised
    """

    id: str
    reference: str
    hypothesis: str = ""
    wer: float = 0.0
    substitutions: int = Field(default=0, ge=0)
    insertions: int = Field(default=0, ge=0)
    deletions: int = Field(default=0, ge=0)
    reference_words: int = Field(default=0, ge=0)
    truncated: bool = False
    error: str | None = None

    @property
    def edits(self) -> int:
        return self.substitutions + self.insertions + self.deletions


class EvalReport(BaseModel):
    """Corpus-level evaluation.

    ``corpus_wer`` is total edits over total reference words.
    """

    utterances: list[UtteranceResult]
    corpus_wer: float
    substitutions: int = Field(ge=0)
    insertions: int = Field(ge=0)
    deletions: int = Field(ge=0)
    reference_words: int = Field(ge=0)
    mode: str
    resolution: str
    sigma: float | None = None
    seed: int | None = None

    @property
    def failed(self) -> list[UtteranceResult]:
        return [u for u in self.utterances if u.error is not None]
