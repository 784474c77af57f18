"""Built-in correctness suites: gradients, loss identities and decoding oracles."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from avasr.data import Batch, Example, collate
from avasr.decode import beam_search, exhaustive_best, wer
from avasr.models import SPECIAL_TOKENS, AVASRConfig
from avasr.network import AVASRModel
from avasr.tensor import analytic_grad, default_dtype, max_relative_error, no_grad, sample_coords
from avasr.tokenizer import BOS_ID, EOS_ID
from avasr.train import batch_loss


logger = logging.getLogger(__name__)

GRAD_TOLERANCE = 1e-4
GRAD_STEP = 1e-5


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def toy_config(**overrides) -> AVASRConfig:
    """Smallest full network: one layer per stack, width 8, two heads, no dropout."""
    base = {
        "d_model": 8,
        "heads": 2,
        "enc_layers": 1,
        "dec_layers": 1,
        "d_ff": 16,
        "dropout": 0.0,
        "feature_dim": 3,
        "stack_factor": 2,
        "video_dim": 5,
        "char_vocab_size": SPECIAL_TOKENS + 5,
        "subword_vocab_size": SPECIAL_TOKENS + 3,
        "alpha_init": 0.5,
    }
    return AVASRConfig(**{**base, **overrides})


def toy_batch(
    config: AVASRConfig, rng: np.random.Generator, lengths: Sequence[int] = (5, 3)
) -> Batch:
    """Random padded batch matching ``config``; utterances differ in length."""
    examples = []
    for i, frames in enumerate(lengths):
        n_char = int(rng.integers(2, 5))
        n_sub = int(rng.integers(1, 4))
        chars = rng.integers(SPECIAL_TOKENS, config.char_vocab_size, size=n_char)
        subs = rng.integers(SPECIAL_TOKENS, config.subword_vocab_size, size=n_sub)
        examples.append(
            Example(
                id=f"toy{i}",
                audio=rng.standard_normal((frames, config.audio_dim)),
                video=rng.standard_normal((1, config.video_dim)),
                char_ids=[BOS_ID, *chars.tolist(), EOS_ID],
                subword_ids=[BOS_ID, *subs.tolist(), EOS_ID],
                reference="",
            )
        )
    return collate(examples)


def check_gradients(
    seeds: Sequence[int] = range(20), per_param: int = 3, gamma: float = 0.5
) -> CheckResult:
    """Analytic vs central-difference gradients of the multiresolution loss in float64."""
    worst = 0.0
    with default_dtype("float64"):
        for seed in seeds:
            rng = np.random.default_rng(seed)
            config = toy_config()
            model = AVASRModel(config, seed=seed)
            model.eval()
            batch = toy_batch(config, rng)
            params = model.parameters()

            def loss():
                return batch_loss(model, batch, gamma, 0.1).total

            coords = sample_coords(params, per_param, rng)
            error = max_relative_error(loss, params, GRAD_STEP, coords)
            worst = max(worst, error)
            logger.debug("gradcheck seed=%d max_rel_error=%.3e", seed, error)
    return CheckResult(
        "gradients",
        worst < GRAD_TOLERANCE,
        f"max relative error {worst:.3e} over {len(seeds)} seeds",
    )


def check_gamma_boundaries(seed: int = 0) -> CheckResult:
    """gamma=1 leaves the character head without gradient; gamma=0 the subword head."""
    failures = []
    with default_dtype("float64"):
        config = toy_config()
        model = AVASRModel(config, seed=seed)
        model.eval()
        batch = toy_batch(config, np.random.default_rng(seed))
        for gamma, head, embed in (
            (1.0, model.char_head, model.char_embed),
            (0.0, model.subword_head, model.subword_embed),
        ):
            params = [*head.parameters(), *embed.parameters()]
            grads = analytic_grad(lambda: batch_loss(model, batch, gamma, 0.1).total, params)
            if any(np.any(g != 0.0) for g in grads):
                failures.append(f"gamma={gamma}")
    return CheckResult(
        "gamma_boundaries",
        not failures,
        "excluded heads receive no gradient" if not failures else f"leak at {failures}",
    )


def check_gate_identity(seed: int = 0) -> CheckResult:
    """Gating alpha reproduces the fusion-disabled encoder on the same weights."""
    config = toy_config()
    fused = AVASRModel(config, seed=seed)
    audio_only = AVASRModel(config.model_copy(update={"fusion_enabled": False}), seed=seed)
    batch = toy_batch(config, np.random.default_rng(seed))
    gated = replace(batch, gate_alpha=True)
    fused.eval()
    audio_only.eval()
    with no_grad():
        a = fused.encode(gated).data
        b = audio_only.encode(batch).data
    same = bool(np.array_equal(a, b))
    return CheckResult("gate_identity", same, "bit-identical" if same else "encodings differ")


def _edit_distance_matrix(hyp: Sequence[str], ref: Sequence[str]) -> int:
    table = np.zeros((len(ref) + 1, len(hyp) + 1), dtype=np.int64)
    table[:, 0] = np.arange(len(ref) + 1)
    table[0, :] = np.arange(len(hyp) + 1)
    for i in range(1, len(ref) + 1):
        for j in range(1, len(hyp) + 1):
            table[i, j] = min(
                table[i - 1, j] + 1,
                table[i, j - 1] + 1,
                table[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]),
            )
    return int(table[-1, -1])


def check_wer(pairs: int = 1000, max_len: int = 8, seed: int = 0) -> CheckResult:
    """Scorer edit counts against a full dynamic-programming matrix on random pairs."""
    rng = np.random.default_rng(seed)
    lexicon = ["a", "b", "c", "d"]
    mismatches = 0
    for _ in range(pairs):
        ref = [lexicon[i] for i in rng.integers(0, 4, size=rng.integers(1, max_len + 1))]
        hyp = [lexicon[i] for i in rng.integers(0, 4, size=rng.integers(0, max_len + 1))]
        result = wer(hyp, ref)
        if result.edits != _edit_distance_matrix(hyp, ref) or result.wer != result.edits / len(ref):
            mismatches += 1
    hand = wer("a x c".split(), "a b c".split())
    ok = mismatches == 0 and hand.substitutions == 1 and abs(hand.wer - 1 / 3) < 1e-12
    return CheckResult("wer_oracle", ok, f"{mismatches} mismatches over {pairs} pairs")


def random_step_fn(vocab: int, seed: int) -> Callable[[np.ndarray], np.ndarray]:
    """Deterministic prefix-conditioned log-probabilities, as from a random model."""

    def step(prefixes: np.ndarray) -> np.ndarray:
        rows = []
        for prefix in prefixes:
            logits = np.random.default_rng([seed, *prefix.tolist()]).standard_normal(vocab)
            rows.append(logits - np.logaddexp.reduce(logits))
        return np.stack(rows)

    return step


def check_beam(
    models: int = 50, vocab: int = 4, max_len: int = 3, alpha: float = 0.7
) -> CheckResult:
    """A beam covering every sequence matches exhaustive enumeration."""
    beam = vocab**max_len
    mismatches = 0
    for seed in range(models):
        step = random_step_fn(vocab, seed)
        found = beam_search(step, beam=beam, alpha=alpha, max_len=max_len)
        best = exhaustive_best(step, vocab, max_len, alpha)
        if found.best.tokens != best.tokens:
            mismatches += 1
    return CheckResult(
        "beam_oracle", mismatches == 0, f"{mismatches} mismatches over {models} models"
    )


def run_selfcheck(seeds: int = 20) -> list[CheckResult]:
    """Run every suite and log one line per result."""
    results = [
        check_gradients(range(seeds)),
        check_gamma_boundaries(),
        check_gate_identity(),
        check_wer(),
        check_beam(),
    ]
    for r in results:
        log = logger.info if r.passed else logger.error
        log("selfcheck %s %s: %s", r.name, "ok" if r.passed else "FAILED", r.detail)
    return results
