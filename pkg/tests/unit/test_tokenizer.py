"""Tests for normalization, the character vocabulary and BPE."""

import numpy as np
import pytest

from avasr.exceptions import ConfigurationError, IngestionError
from avasr.tokenizer import (
    SPECIALS,
    UNK_ID,
    BpeModel,
    CharVocab,
    decode_char,
    encode_char,
    normalize,
    train_bpe,
    words,
)


CORPUS = ["the cat sat", "the cat ran", "a hat", "that cat"]


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("Hello,  World!", "hello world"),
        ("don't   STOP", "don't stop"),
        ("  a_b  ", "a b"),
        ("", ""),
    ],
)
def test_normalize(raw, expected):
    assert normalize(raw) == expected


def test_words():
    assert words("The cat, sat.") == ["the", "cat", "sat"]


class TestCharVocab:
    def test_from_corpus(self):
        """Test graphemes are sorted and follow the reserved ids."""
        vocab = CharVocab.from_corpus(CORPUS)
        assert vocab.symbols[: len(SPECIALS)] == list(SPECIALS)
        assert vocab.graphemes == sorted(set("".join(CORPUS)))
        assert len(vocab) == len(SPECIALS) + len(vocab.graphemes)

    def test_round_trip(self):
        vocab = CharVocab.from_corpus(CORPUS)
        for line in CORPUS:
            assert decode_char(vocab, encode_char(vocab, line)) == line

    def test_unknown_grapheme(self, caplog):
        vocab = CharVocab.from_corpus(CORPUS)
        ids = vocab.encode("cz")
        assert ids[1] == UNK_ID
        assert vocab.oov["z"] == 1
        assert "Out-of-vocabulary" in caplog.text
        assert vocab.decode(ids) == "c⁇"

    def test_serialization(self, tmp_path):
        vocab = CharVocab.from_corpus(CORPUS)
        path = tmp_path / "char.vocab"
        vocab.save(path)
        assert "<space>" in path.read_text(encoding="utf-8").splitlines()
        assert CharVocab.load(path).symbols == vocab.symbols

    def test_bad_header(self):
        with pytest.raises(IngestionError) as exc:
            CharVocab.loads("a\nb\n")
        assert exc.value.error_code == "BAD_CHAR_VOCAB"


class TestBpe:
    def test_most_frequent_pair_first(self):
        """Test the first merge is the most frequent adjacent pair."""
        model = train_bpe(CORPUS, 12)
        assert model.merges[0] == ("a", "t")

    def test_ties_break_lexicographically(self):
        model = train_bpe(["ab ab cd cd"], 7)
        assert model.merges[0] == ("a", "b")

    def test_symbol_budget(self):
        model = train_bpe(CORPUS, 14)
        assert model.num_symbols <= 14
        assert len(model) == model.num_symbols + len(SPECIALS)

    def test_stops_when_no_pair_repeats(self):
        model = train_bpe(["ab"], 50)
        assert model.merges == []

    def test_round_trip(self):
        model = train_bpe(CORPUS, 14)
        for line in CORPUS:
            assert model.decode(model.encode(line)) == line

    def test_never_longer_than_characters(self):
        model = train_bpe(CORPUS, 14)
        for line in CORPUS + ["cat that hat"]:
            assert len(model.encode(line)) <= len(line)

    def test_unknown_symbol(self):
        model = train_bpe(CORPUS, 14)
        assert UNK_ID in model.encode("zebra")

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_round_trip(self, seed):
        """Test decode(encode(s)) == s and the length bound on random in-alphabet text."""
        model = train_bpe(CORPUS, 14)
        alphabet = sorted(set("".join(CORPUS).replace(" ", "")))
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            n_words = int(rng.integers(1, 5))
            text = " ".join(
                "".join(rng.choice(alphabet, size=int(rng.integers(1, 7))))
                for _ in range(n_words)
            )
            ids = model.encode(text)
            assert model.decode(ids) == text
            assert len(ids) <= len(text)
            assert UNK_ID not in ids

    def test_unseen_word_of_known_characters(self):
        model = train_bpe(CORPUS, 14)
        ids = model.encode("snatch tense chart")
        assert UNK_ID not in ids
        assert model.decode(ids) == "snatch tense chart"
        assert not model.oov

    def test_serialization(self, tmp_path):
        model = train_bpe(CORPUS, 14)
        path = tmp_path / "bpe.model"
        model.save(path)
        loaded = BpeModel.load(path)
        assert loaded.symbols == model.symbols
        assert loaded.encode("the cat") == model.encode("the cat")

    def test_file_layout(self):
        """Test the model file is header, base alphabet, then merges."""
        model = train_bpe(CORPUS, 14)
        lines = model.dumps().splitlines()
        n_alphabet, n_merges = len(model.alphabet), len(model.merges)
        assert lines[0] == f"#bpe\t{n_alphabet}\t{n_merges}"
        assert lines[1 : 1 + n_alphabet] == model.alphabet
        assert "▁" in lines[1 : 1 + n_alphabet]
        assert lines[1 + n_alphabet :] == [f"{a}\t{b}" for a, b in model.merges]
        assert len(lines) == 1 + n_alphabet + n_merges

    @pytest.mark.parametrize(
        "text, code",
        [
            ("", "BAD_BPE_HEADER"),
            ("#bpe\t1\t0\na\nb\n", "BAD_BPE_BODY"),
            ("#bpe\t1\t1\na\nab\n", "BAD_BPE_MERGE"),
        ],
    )
    def test_malformed_model(self, text, code):
        with pytest.raises(IngestionError) as exc:
            BpeModel.loads(text)
        assert exc.value.error_code == code

    def test_invalid_training(self):
        with pytest.raises(ConfigurationError) as exc:
            train_bpe(["", "  "], 10)
        assert exc.value.error_code == "EMPTY_CORPUS"
        with pytest.raises(ConfigurationError) as exc:
            train_bpe(CORPUS, 3)
        assert exc.value.error_code == "INVALID_VOCAB_SIZE"
