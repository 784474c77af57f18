"""Byte-pair-encoding subword tokenizer."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

from avasr.exceptions import ConfigurationError, IngestionError
from avasr.tokenizer.text import SPECIALS, UNK_ID, UNK_TEXT, normalize


logger = logging.getLogger(__name__)

WORD_MARKER = "▁"
HEADER = "#bpe"

Pair = tuple[str, str]


def _merge_pair(symbols: Sequence[str], pair: Pair) -> tuple[str, ...]:
    left, right = pair
    out: list[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


class BpeModel:
    """Ordered merge table over a base alphabet.

    Every word is split into characters with :data:`WORD_MARKER` prefixed;
    merges are applied lowest-rank first. The marker of the first word in a
    sentence is implicit: when it remains a standalone symbol it is not
    emitted, so a sentence never encodes to more ids than it has characters.
    """

    def __init__(self, alphabet: Sequence[str], merges: Sequence[Pair]):
        self.alphabet = list(alphabet)
        self.merges = [tuple(m) for m in merges]
        self.ranks: dict[Pair, int] = {}
        for rank, pair in enumerate(self.merges):
            self.ranks.setdefault(pair, rank)  # type: ignore[arg-type]

        symbols = list(self.alphabet)
        known = set(symbols)
        for left, right in self.merges:
            merged = left + right
            if merged not in known:
                known.add(merged)
                symbols.append(merged)
        self.symbols = list(SPECIALS) + symbols
        self._ids = {s: i + len(SPECIALS) for i, s in enumerate(symbols)}
        self._word_cache: dict[str, tuple[str, ...]] = {}
        self.oov: Counter[str] = Counter()

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def num_symbols(self) -> int:
        """Learned symbols, specials excluded."""
        return len(self.symbols) - len(SPECIALS)

    def segment_word(self, word: str) -> tuple[str, ...]:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        symbols: tuple[str, ...] = (WORD_MARKER, *word)
        while len(symbols) > 1:
            candidates = [
                self.ranks[pair]
                for pair in zip(symbols, symbols[1:])
                if pair in self.ranks
            ]
            if not candidates:
                break
            symbols = _merge_pair(symbols, self.merges[min(candidates)])  # type: ignore[arg-type]
        self._word_cache[word] = symbols
        return symbols

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for position, word in enumerate(text.split()):
            symbols = self.segment_word(word)
            if position == 0 and symbols[0] == WORD_MARKER:
                symbols = symbols[1:]
            for symbol in symbols:
                idx = self._ids.get(symbol)
                if idx is None:
                    if not self.oov[symbol]:
                        logger.warning("Out-of-alphabet symbol %r mapped to UNK", symbol)
                    self.oov[symbol] += 1
                    idx = UNK_ID
                ids.append(idx)
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        pieces = []
        for idx in ids:
            if idx == UNK_ID:
                pieces.append(UNK_TEXT)
            elif idx >= len(SPECIALS):
                pieces.append(self.symbols[idx])
        return "".join(pieces).replace(WORD_MARKER, " ").strip()

    def dumps(self) -> str:
        """Header, base alphabet (one per line), then ``left<TAB>right`` merges."""
        lines = [f"{HEADER}\t{len(self.alphabet)}\t{len(self.merges)}"]
        lines.extend(self.alphabet)
        lines.extend(f"{left}\t{right}" for left, right in self.merges)
        return "\n".join(lines) + "\n"

    def save(self, path: Path) -> None:
        path.write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> BpeModel:
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        try:
            tag, n_alphabet, n_merges = lines[0].split("\t")
            n_a, n_m = int(n_alphabet), int(n_merges)
        except (IndexError, ValueError) as e:
            raise IngestionError(
                "Malformed BPE model header",
                error_code="BAD_BPE_HEADER",
                details={"header": lines[0] if lines else ""},
            ) from e
        if tag != HEADER or len(lines) != 1 + n_a + n_m:
            raise IngestionError(
                "BPE model body does not match its header",
                error_code="BAD_BPE_BODY",
                details={"alphabet": n_a, "merges": n_m, "lines": len(lines)},
            )
        alphabet = lines[1 : 1 + n_a]
        merges = [tuple(line.split("\t")) for line in lines[1 + n_a :]]
        if any(len(m) != 2 for m in merges):
            raise IngestionError("Malformed BPE merge line", error_code="BAD_BPE_MERGE")
        return cls(alphabet, merges)  # type: ignore[arg-type]

    @classmethod
    def load(cls, path: Path) -> BpeModel:
        return cls.loads(path.read_text(encoding="utf-8"))


def train_bpe(corpus: Iterable[str], vocab_size: int) -> BpeModel:
    """Learn merges until ``vocab_size`` symbols exist or no pair repeats.

    The most frequent adjacent pair is merged each round; ties go to the
    lexicographically smallest pair. ``vocab_size`` counts learned symbols
    (base alphabet plus merges), not the reserved specials.

    Raises:
        ConfigurationError: If the corpus is empty or ``vocab_size`` does not
            exceed the base alphabet.
    """
    word_freq: Counter[str] = Counter()
    for line in corpus:
        word_freq.update(normalize(line).split())
    if not word_freq:
        raise ConfigurationError("BPE corpus is empty", error_code="EMPTY_CORPUS")

    alphabet = sorted({WORD_MARKER} | {ch for word in word_freq for ch in word})
    if vocab_size <= len(alphabet):
        raise ConfigurationError(
            f"vocab_size={vocab_size} must exceed the base alphabet ({len(alphabet)})",
            error_code="INVALID_VOCAB_SIZE",
            details={"vocab_size": vocab_size, "alphabet": len(alphabet)},
        )

    words: Counter[tuple[str, ...]] = Counter(
        {(WORD_MARKER, *word): freq for word, freq in word_freq.items()}
    )
    known = set(alphabet)
    merges: list[Pair] = []
    while len(known) < vocab_size:
        pairs: Counter[Pair] = Counter()
        for symbols, freq in words.items():
            for pair in zip(symbols, symbols[1:]):
                pairs[pair] += freq
        if not pairs:
            break
        top = max(pairs.values())
        if top < 2:
            break
        best = min(pair for pair, count in pairs.items() if count == top)
        merges.append(best)
        known.add(best[0] + best[1])
        merged: Counter[tuple[str, ...]] = Counter()
        for symbols, freq in words.items():
            merged[_merge_pair(symbols, best)] += freq
        words = merged

    logger.info(
        "Trained BPE: alphabet=%d merges=%d symbols=%d", len(alphabet), len(merges), len(known)
    )
    return BpeModel(alphabet, merges)


def encode_subword(model: BpeModel, text: str) -> list[int]:
    return model.encode(text)


def decode_subword(model: BpeModel, ids: Iterable[int]) -> str:
    return model.decode(ids)
