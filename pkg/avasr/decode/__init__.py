"""Beam search, WER and test-set evaluation."""

from avasr.decode.beam import (
    BeamResult,
    Hypothesis,
    beam_search,
    exhaustive_best,
    greedy_search,
    length_penalty,
    model_step_fn,
)
from avasr.decode.evaluate import (
    EVAL_MODES,
    Decoded,
    decode_example,
    decode_examples,
    evaluate,
    format_report_table,
    read_report_tsv,
    score,
    write_report_tsv,
)
from avasr.decode.wer import WerResult, relative_improvement, wer

__all__ = [
    # Search
    "Hypothesis",
    "BeamResult",
    "beam_search",
    "greedy_search",
    "exhaustive_best",
    "length_penalty",
    "model_step_fn",
    # Scoring
    "wer",
    "WerResult",
    "relative_improvement",
    # Evaluation
    "EVAL_MODES",
    "Decoded",
    "decode_example",
    "decode_examples",
    "evaluate",
    "score",
    "write_report_tsv",
    "read_report_tsv",
    "format_report_table",
]
