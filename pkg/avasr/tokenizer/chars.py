"""Grapheme vocabulary."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

from avasr.exceptions import IngestionError
from avasr.tokenizer.text import SPECIALS, UNK_ID, UNK_TEXT, normalize


logger = logging.getLogger(__name__)

SPACE_TOKEN = "<space>"


class CharVocab:
    """Fixed grapheme inventory; ids are dense with specials first."""

    def __init__(self, graphemes: Sequence[str]):
        self.graphemes = list(graphemes)
        self.symbols = list(SPECIALS) + self.graphemes
        self._ids = {g: i + len(SPECIALS) for i, g in enumerate(self.graphemes)}
        self.oov: Counter[str] = Counter()

    @classmethod
    def from_corpus(cls, lines: Iterable[str]) -> CharVocab:
        """Extract every grapheme (space included) from normalized transcripts."""
        seen: set[str] = set()
        for line in lines:
            seen.update(normalize(line))
        return cls(sorted(seen))

    def __len__(self) -> int:
        return len(self.symbols)

    def encode(self, text: str) -> list[int]:
        ids = []
        for ch in text:
            idx = self._ids.get(ch)
            if idx is None:
                if not self.oov[ch]:
                    logger.warning("Out-of-vocabulary grapheme %r mapped to UNK", ch)
                self.oov[ch] += 1
                idx = UNK_ID
            ids.append(idx)
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        out = []
        for idx in ids:
            if idx == UNK_ID:
                out.append(UNK_TEXT)
            elif idx >= len(SPECIALS):
                out.append(self.symbols[idx])
        return "".join(out)

    def save(self, path: Path) -> None:
        path.write_text(self.dumps(), encoding="utf-8")

    def dumps(self) -> str:
        """One grapheme per line in id order; the space is written as ``<space>``."""
        return "\n".join(SPACE_TOKEN if s == " " else s for s in self.symbols) + "\n"

    @classmethod
    def loads(cls, text: str) -> CharVocab:
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if tuple(lines[: len(SPECIALS)]) != SPECIALS:
            raise IngestionError(
                "Character vocabulary does not start with the reserved symbols",
                error_code="BAD_CHAR_VOCAB",
                details={"head": lines[: len(SPECIALS)]},
            )
        return cls([" " if s == SPACE_TOKEN else s for s in lines[len(SPECIALS):]])

    @classmethod
    def load(cls, path: Path) -> CharVocab:
        return cls.loads(path.read_text(encoding="utf-8"))


def encode_char(vocab: CharVocab, text: str) -> list[int]:
    return vocab.encode(text)


def decode_char(vocab: CharVocab, ids: Iterable[int]) -> str:
    return vocab.decode(ids)
