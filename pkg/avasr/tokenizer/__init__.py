"""Character and byte-pair-encoding tokenizers."""

from avasr.tokenizer.bpe import (
    WORD_MARKER,
    BpeModel,
    decode_subword,
    encode_subword,
    train_bpe,
)
from avasr.tokenizer.chars import CharVocab, decode_char, encode_char
from avasr.tokenizer.text import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    SPECIALS,
    UNK_ID,
    normalize,
    words,
)

__all__ = [
    "CharVocab",
    "BpeModel",
    "train_bpe",
    "encode_char",
    "decode_char",
    "encode_subword",
    "decode_subword",
    "normalize",
    "words",
    "WORD_MARKER",
    "SPECIALS",
    "PAD_ID",
    "BOS_ID",
    "EOS_ID",
    "UNK_ID",
]
