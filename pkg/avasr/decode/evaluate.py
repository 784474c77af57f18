"""Decoding and scoring of a test set, with audio-only evaluation modes."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from avasr.data import Example, collate
from avasr.decode.beam import beam_search, model_step_fn
from avasr.decode.wer import wer
from avasr.exceptions import AVASRError, ConfigurationError, DecodeError
from avasr.models import DecodeConfig, EvalReport, UtteranceResult
from avasr.network import AVASRModel, apply_missing_video_mode
from avasr.tensor import no_grad
from avasr.tokenizer import BOS_ID, PAD_ID, UNK_ID, BpeModel, CharVocab, normalize


logger = logging.getLogger(__name__)

NEVER_EMITTED = (PAD_ID, BOS_ID, UNK_ID)

EVAL_MODES: dict[str, str | None] = {
    "full": None,
    "audio_only_zeros": "zeros",
    "audio_only_gaussian": "gaussian",
    "audio_only_gate": "gate_alpha",
}
REPORT_COLUMNS = (
    "id",
    "reference",
    "hypothesis",
    "wer",
    "substitutions",
    "insertions",
    "deletions",
    "reference_words",
    "truncated",
    "error",
)


@dataclass(frozen=True)
class Decoded:
    id: str
    reference: str
    hypothesis: str
    truncated: bool
    error: str | None = None


def _check_mode(mode: str) -> str | None:
    if mode not in EVAL_MODES:
        raise ConfigurationError(
            f"Unknown evaluation mode: {mode}",
            error_code="INVALID_EVAL_MODE",
            details={"mode": mode, "allowed": list(EVAL_MODES)},
        )
    return EVAL_MODES[mode]


def decode_example(
    model: AVASRModel,
    example: Example,
    char_vocab: CharVocab,
    bpe: BpeModel,
    config: DecodeConfig,
    missing_mode: str | None = None,
    rng: np.random.Generator | None = None,
) -> Decoded:
    """Beam-decode one utterance into normalized text."""
    batch = collate([example])
    if missing_mode is not None:
        batch = apply_missing_video_mode(
            batch, missing_mode, config.missing_sigma, rng, video_dim=model.config.video_dim
        )
    with no_grad():
        memory = model.encode(batch)
    result = beam_search(
        model_step_fn(model, memory, batch.audio_mask, config.resolution),
        beam=config.beam_size,
        alpha=config.length_penalty,
        max_len=config.max_decode_len,
        kind=config.length_penalty_kind,
        greedy_floor=config.greedy_floor,
        banned=NEVER_EMITTED,
    )
    if not np.isfinite(result.best.logprob):
        raise DecodeError(
            f"Decoding {example.id} produced a non-finite score",
            error_code="NON_FINITE_SCORE",
            details={"id": example.id},
        )
    tokenizer = char_vocab if config.resolution == "char" else bpe
    text = normalize(tokenizer.decode(result.best.body))
    return Decoded(example.id, example.reference, text, result.truncated)


def decode_examples(
    model: AVASRModel,
    examples: Sequence[Example],
    char_vocab: CharVocab,
    bpe: BpeModel,
    config: DecodeConfig,
    mode: str = "full",
    seed: int = 0,
) -> list[Decoded]:
    """Decode every example; results are ordered by utterance id.

    Failures are captured per utterance in :attr:`Decoded.error`. Gaussian
    noise for utterance ``i`` (in id order) is drawn from a generator seeded
    with ``(seed, i)``, so results do not depend on the worker count.
    """
    missing_mode = _check_mode(mode)
    ordered = sorted(examples, key=lambda e: e.id)
    model.eval()

    def run(item: tuple[int, Example]) -> Decoded:
        index, example = item
        rng = np.random.default_rng([seed, index])
        try:
            return decode_example(model, example, char_vocab, bpe, config, missing_mode, rng)
        except AVASRError as e:
            logger.error("Decoding %s failed: %s", example.id, e)
            return Decoded(example.id, example.reference, "", False, str(e))

    items = list(enumerate(ordered))
    if config.decode_workers <= 1:
        return [run(item) for item in items]
    with ThreadPoolExecutor(max_workers=config.decode_workers) as pool:
        return list(pool.map(run, items))


def score(
    decoded: Sequence[Decoded],
    mode: str,
    resolution: str,
    sigma: float | None = None,
    seed: int | None = None,
) -> EvalReport:
    """Aggregate per-utterance WER; corpus WER is total edits over reference words."""
    utterances = []
    for item in decoded:
        reference = item.reference.split()
        result = wer(item.hypothesis.split(), reference)
        utterances.append(
            UtteranceResult(
                id=item.id,
                reference=item.reference,
                hypothesis=item.hypothesis,
                wer=result.wer,
                substitutions=result.substitutions,
                insertions=result.insertions,
                deletions=result.deletions,
                reference_words=len(reference),
                truncated=item.truncated,
                error=item.error,
            )
        )
    return build_report(utterances, mode, resolution, sigma, seed)


def build_report(
    utterances: list[UtteranceResult],
    mode: str,
    resolution: str,
    sigma: float | None = None,
    seed: int | None = None,
) -> EvalReport:
    s = sum(u.substitutions for u in utterances)
    i = sum(u.insertions for u in utterances)
    d = sum(u.deletions for u in utterances)
    words = sum(u.reference_words for u in utterances)
    if words:
        corpus = (s + i + d) / words
    else:
        corpus = 0.0 if s + i + d == 0 else math.inf
    return EvalReport(
        utterances=utterances,
        corpus_wer=corpus,
        substitutions=s,
        insertions=i,
        deletions=d,
        reference_words=words,
        mode=mode,
        resolution=resolution,
        sigma=sigma,
        seed=seed,
    )


def evaluate(
    model: AVASRModel,
    examples: Sequence[Example],
    char_vocab: CharVocab,
    bpe: BpeModel,
    config: DecodeConfig,
    mode: str = "full",
    seed: int = 0,
) -> EvalReport:
    """Decode and score a test set.

    Args:
        model: Trained model (switched to eval mode)
        examples: Loaded test utterances
        char_vocab: Character tokenizer
        bpe: Subword tokenizer
        config: Beam and output-resolution settings
        mode: ``full``, ``audio_only_zeros``, ``audio_only_gaussian`` or
            ``audio_only_gate``
        seed: Seed of the gaussian replacement vectors

    Returns:
        Report with per-utterance results ordered by id
    """
    decoded = decode_examples(model, examples, char_vocab, bpe, config, mode, seed)
    sigma = config.missing_sigma if mode == "audio_only_gaussian" else None
    report = score(decoded, mode, config.resolution, sigma, seed)
    logger.info(
        "Evaluated mode=%s resolution=%s utterances=%d corpus_wer=%.4f failed=%d",
        mode,
        config.resolution,
        len(report.utterances),
        report.corpus_wer,
        len(report.failed),
    )
    return report


def write_report_tsv(report: EvalReport, path: Path) -> None:
    """Machine-readable report: a ``#`` echo line, a header and one row per utterance."""
    echo = (
        f"# mode={report.mode}\tresolution={report.resolution}"
        f"\tsigma={report.sigma}\tseed={report.seed}"
    )
    lines = [echo, "\t".join(REPORT_COLUMNS)]
    for u in report.utterances:
        lines.append(
            "\t".join(
                [
                    u.id,
                    u.reference,
                    u.hypothesis,
                    repr(u.wer),
                    str(u.substitutions),
                    str(u.insertions),
                    str(u.deletions),
                    str(u.reference_words),
                    str(int(u.truncated)),
                    (u.error or "").replace("\t", " ").replace("\n", " "),
                ]
            )
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report_tsv(path: Path) -> EvalReport:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    echo: dict[str, str] = {}
    if lines and lines[0].startswith("#"):
        for item in lines.pop(0)[1:].strip().split("\t"):
            key, _, value = item.partition("=")
            echo[key] = value
    if not lines or tuple(lines[0].split("\t")) != REPORT_COLUMNS:
        raise ConfigurationError(f"{path} is not an evaluation report", error_code="BAD_REPORT")
    utterances = []
    for line in lines[1:]:
        row = dict(zip(REPORT_COLUMNS, line.split("\t")))
        utterances.append(
            UtteranceResult(
                id=row["id"],
                reference=row["reference"],
                hypothesis=row["hypothesis"],
                wer=float(row["wer"]),
                substitutions=int(row["substitutions"]),
                insertions=int(row["insertions"]),
                deletions=int(row["deletions"]),
                reference_words=int(row["reference_words"]),
                truncated=row["truncated"] == "1",
                error=row.get("error") or None,
            )
        )
    sigma = echo.get("sigma")
    seed = echo.get("seed")
    return build_report(
        utterances,
        echo.get("mode", "unknown"),
        echo.get("resolution", "unknown"),
        float(sigma) if sigma not in (None, "None") else None,
        int(seed) if seed not in (None, "None") else None,
    )


def format_report_table(report: EvalReport) -> str:
    """Human-readable table of per-utterance results plus a corpus summary."""
    width = max([len("id"), *(len(u.id) for u in report.utterances)])
    lines = [f"{'id':<{width}}  {'WER':>7}  {'S':>3} {'I':>3} {'D':>3}  hypothesis | reference"]
    for u in report.utterances:
        flag = " [truncated]" if u.truncated else ""
        flag += f" [error: {u.error}]" if u.error else ""
        lines.append(
            f"{u.id:<{width}}  {u.wer:7.2%}  {u.substitutions:>3} {u.insertions:>3} "
            f"{u.deletions:>3}  {u.hypothesis} | {u.reference}{flag}"
        )
    lines.append(
        f"corpus WER {report.corpus_wer:.2%} (S={report.substitutions} I={report.insertions} "
        f"D={report.deletions} N={report.reference_words}) mode={report.mode} "
        f"resolution={report.resolution}"
    )
    return "\n".join(lines)
