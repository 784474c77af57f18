"""Word error rate."""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import NamedTuple

from avasr.exceptions import ContractError


class WerResult(NamedTuple):
    wer: float
    substitutions: int
    insertions: int
    deletions: int

    @property
    def edits(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def wer(hypothesis: Sequence[str], reference: Sequence[str]) -> WerResult:
    """Levenshtein alignment over words with unit costs.

    Among minimum-cost alignments the one with the most substitutions is
    counted, so ``wer(a, b)`` and ``wer(b, a)`` report the same
    substitutions with insertions and deletions swapped. An empty reference
    scores 0.0 against an empty hypothesis and ``inf`` otherwise.

    Examples:
        >>> wer("a x c".split(), "a b c".split())
        WerResult(wer=0.3333333333333333, substitutions=1, insertions=0, deletions=0)
    """
    hyp, ref = list(hypothesis), list(reference)
    if not ref:
        return WerResult(0.0 if not hyp else math.inf, 0, len(hyp), 0)

    # Cells hold (edits, -substitutions) so min() prefers substitution-rich paths.
    previous = [(j, 0) for j in range(len(hyp) + 1)]
    for i in range(1, len(ref) + 1):
        current = [(i, 0)]
        for j in range(1, len(hyp) + 1):
            diag_cost, diag_subs = previous[j - 1]
            if ref[i - 1] == hyp[j - 1]:
                diagonal = (diag_cost, diag_subs)
            else:
                diagonal = (diag_cost + 1, diag_subs - 1)
            deletion = (previous[j][0] + 1, previous[j][1])
            insertion = (current[j - 1][0] + 1, current[j - 1][1])
            current.append(min(diagonal, deletion, insertion))
        previous = current

    edits, neg_subs = previous[-1]
    substitutions = -neg_subs
    gaps = edits - substitutions
    surplus = len(hyp) - len(ref)
    insertions = (gaps + surplus) // 2
    deletions = (gaps - surplus) // 2
    return WerResult(edits / len(ref), substitutions, insertions, deletions)


def relative_improvement(baseline_wer: float, system_wer: float) -> float:
    """``(baseline - system) / baseline``; positive when the system is better.

    Raises:
        ContractError: If the baseline WER is zero.
    """
    if baseline_wer == 0:
        raise ContractError(
            "Relative improvement over a zero baseline WER is undefined",
            error_code="ZERO_BASELINE",
        )
    return (baseline_wer - system_wer) / baseline_wer
