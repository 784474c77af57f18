"""Beam search with length normalization."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from avasr.exceptions import ConfigurationError
from avasr.tensor import Tensor, no_grad
from avasr.tokenizer import BOS_ID, EOS_ID

PenaltyKind = Literal["power", "gnmt"]

# Maps ``[n, len]`` BOS-prefixed prefixes to ``[n, vocab]`` next-token log-probabilities.
StepFn = Callable[[np.ndarray], np.ndarray]


def _ban(logprobs: np.ndarray, banned: Sequence[int]) -> np.ndarray:
    if not banned:
        return logprobs
    out = np.array(logprobs, dtype=np.float64)
    out[:, list(banned)] = -np.inf
    return out


def length_penalty(length: int, alpha: float, kind: PenaltyKind = "power") -> float:
    """Divisor applied to a hypothesis log-probability.

    ``power``: ``length ** alpha``; ``gnmt``: ``((5 + length) / 6) ** alpha``.
    """
    if kind == "power":
        return float(length) ** alpha
    if kind == "gnmt":
        return ((5.0 + length) / 6.0) ** alpha
    raise ConfigurationError(
        f"Unknown length penalty: {kind}", error_code="INVALID_LENGTH_PENALTY"
    )


@dataclass(frozen=True)
class Hypothesis:
    """A partial or complete output sequence.

    Attributes:
        tokens: BOS-prefixed ids, ending with EOS when finished
        logprob: Sum of token log-probabilities
        finished: EOS has been emitted
        alpha: Length normalization exponent
        kind: Length penalty form
    """

    tokens: tuple[int, ...]
    logprob: float
    finished: bool = False
    alpha: float = 0.7
    kind: PenaltyKind = "power"

    @property
    def length(self) -> int:
        """Generated tokens: BOS excluded, EOS included."""
        return len(self.tokens) - 1

    @property
    def score(self) -> float:
        if self.length == 0:
            return self.logprob
        return self.logprob / length_penalty(self.length, self.alpha, self.kind)

    @property
    def body(self) -> list[int]:
        """Output ids without BOS and EOS."""
        end = len(self.tokens) - 1 if self.finished else len(self.tokens)
        return list(self.tokens[1:end])

    def rank_key(self) -> tuple[bool, float]:
        """Finished hypotheses outrank unfinished ones, then higher score wins."""
        return (self.finished, self.score)

    def extend(self, token: int, logprob: float, eos: int) -> Hypothesis:
        return Hypothesis(
            tokens=(*self.tokens, token),
            logprob=self.logprob + logprob,
            finished=token == eos,
            alpha=self.alpha,
            kind=self.kind,
        )


@dataclass(frozen=True)
class BeamResult:
    best: Hypothesis
    finished: list[Hypothesis] = field(default_factory=list)

    @property
    def truncated(self) -> bool:
        """No hypothesis emitted EOS within the length limit."""
        return not self.best.finished


def beam_search(
    step_fn: StepFn,
    beam: int = 5,
    alpha: float = 0.7,
    max_len: int = 200,
    kind: PenaltyKind = "power",
    bos: int = BOS_ID,
    eos: int = EOS_ID,
    greedy_floor: bool = False,
    banned: Sequence[int] = (),
) -> BeamResult:
    """Search for the sequence maximizing ``logprob / penalty(len)``.

    Every step expands each live hypothesis by every token and keeps the
    ``beam`` candidates with the highest cumulative log-probability;
    candidates ending in EOS move to the finished pool and are never
    extended. The search ends when no hypothesis is live or ``max_len``
    tokens have been generated. The best finished hypothesis by normalized
    score is returned, or the best unfinished one when none finished.

    Args:
        step_fn: Next-token log-probabilities for a batch of prefixes
        beam: Beam width
        alpha: Length normalization exponent (0 ranks by raw log-probability)
        max_len: Maximum generated tokens, EOS included
        kind: Length penalty form
        bos: Start token
        eos: End token
        greedy_floor: Also run greedy decoding and keep it if it ranks higher
        banned: Ids never emitted (e.g. PAD, BOS and UNK when decoding a model)

    Returns:
        Best hypothesis and the finished pool
    """
    if beam < 1 or max_len < 1:
        raise ConfigurationError(
            f"beam and max_len must be >= 1, got {beam}, {max_len}",
            error_code="INVALID_BEAM",
        )
    live = [Hypothesis((bos,), 0.0, alpha=alpha, kind=kind)]
    finished: list[Hypothesis] = []

    for _ in range(max_len):
        prefixes = np.array([h.tokens for h in live], dtype=np.int64)
        logprobs = _ban(np.asarray(step_fn(prefixes), dtype=np.float64), banned)
        totals = np.array([h.logprob for h in live])[:, None] + logprobs
        order = np.argsort(-totals.reshape(-1), kind="stable")[:beam]
        vocab = logprobs.shape[1]
        next_live = []
        for flat in order:
            if totals.flat[flat] == -np.inf:
                break
            row, token = divmod(int(flat), vocab)
            hyp = live[row].extend(token, float(logprobs[row, token]), eos)
            (finished if hyp.finished else next_live).append(hyp)
        live = next_live
        if not live:
            break

    pool = finished if finished else live
    if not pool:
        raise ConfigurationError(
            "Every token is banned; nothing can be decoded",
            error_code="INVALID_BEAM",
            details={"banned": list(banned)},
        )
    best = max(pool, key=lambda h: h.score)
    if greedy_floor and beam > 1:
        greedy = beam_search(step_fn, 1, alpha, max_len, kind, bos, eos, banned=banned).best
        if greedy.rank_key() > best.rank_key():
            best = greedy
    return BeamResult(best=best, finished=finished)


def greedy_search(
    step_fn: StepFn,
    max_len: int = 200,
    alpha: float = 0.7,
    kind: PenaltyKind = "power",
    bos: int = BOS_ID,
    eos: int = EOS_ID,
    banned: Sequence[int] = (),
) -> Hypothesis:
    """Pick the argmax allowed token at every step until EOS or ``max_len``."""
    hyp = Hypothesis((bos,), 0.0, alpha=alpha, kind=kind)
    while not hyp.finished and hyp.length < max_len:
        logprobs = _ban(np.asarray(step_fn(np.array([hyp.tokens], dtype=np.int64))), banned)[0]
        token = int(np.argmax(logprobs))
        hyp = hyp.extend(token, float(logprobs[token]), eos)
    return hyp


def model_step_fn(model, memory: Tensor, memory_valid: np.ndarray, resolution: str) -> StepFn:
    """Wrap :meth:`AVASRModel.next_token_logprobs` for one utterance's memory."""

    def step(prefixes: np.ndarray) -> np.ndarray:
        with no_grad():
            return model.next_token_logprobs(memory, memory_valid, prefixes, resolution)

    return step


def exhaustive_best(
    step_fn: StepFn,
    vocab: int,
    max_len: int,
    alpha: float = 0.7,
    kind: PenaltyKind = "power",
    bos: int = BOS_ID,
    eos: int = EOS_ID,
    banned: Sequence[int] = (),
) -> Hypothesis:
    """Enumerate every sequence up to ``max_len`` and return the best finished one
    (or best unfinished when no sequence can finish). Exponential; toy sizes only."""
    frontier = [Hypothesis((bos,), 0.0, alpha=alpha, kind=kind)]
    finished: list[Hypothesis] = []
    for _ in range(max_len):
        prefixes = np.array([h.tokens for h in frontier], dtype=np.int64)
        logprobs = np.asarray(step_fn(prefixes), dtype=np.float64)
        extended = [
            h.extend(token, float(logprobs[i, token]), eos)
            for i, h in enumerate(frontier)
            for token in range(vocab)
            if token not in banned
        ]
        finished += [h for h in extended if h.finished]
        frontier = [h for h in extended if not h.finished]
        if not frontier:
            break
    pool = finished if finished else frontier
    return max(pool, key=lambda h: h.score)

