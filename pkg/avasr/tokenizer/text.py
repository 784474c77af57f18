"""Transcript normalization and reserved token ids."""

from __future__ import annotations

import re


PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
SPECIALS = ("<pad>", "<s>", "</s>", "<unk>")
UNK_TEXT = "⁇"

_PUNCT = re.compile(r"[^\w\s']|_")
_SPACE = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase, replace punctuation except apostrophes with spaces, collapse whitespace.

    Applied identically to training transcripts, references and hypotheses.

    Examples:
        >>> normalize("Hello,  World!")
        'hello world'
        >>> normalize("don't   STOP")
        "don't stop"
    """
    text = _PUNCT.sub(" ", text.lower())
    return _SPACE.sub(" ", text).strip()


def words(text: str) -> list[str]:
    return normalize(text).split()
