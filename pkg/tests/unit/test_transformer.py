"""Tests for positional encodings and encoder/decoder stacks."""

import numpy as np
import pytest

from avasr.exceptions import DimensionError
from avasr.nn import Decoder, Encoder, causal_mask, sinusoidal_positions
from avasr.tensor import Tensor


def test_positions_at_zero():
    """Test sine columns are 0 and cosine columns are 1 at position 0."""
    table = sinusoidal_positions(3, 8).data
    np.testing.assert_array_equal(table[0, 0::2], 0.0)
    np.testing.assert_array_equal(table[0, 1::2], 1.0)


def test_positions_formula(float64):
    """Test the (4, 8) table against the direct formula."""
    table = sinusoidal_positions(4, 8).data
    expected = np.zeros((4, 8))
    for pos in range(4):
        for i in range(0, 8, 2):
            angle = pos / 10000 ** (i / 8)
            expected[pos, i] = np.sin(angle)
            expected[pos, i + 1] = np.cos(angle)
    assert np.max(np.abs(table - expected)) < 1e-12
    assert np.all(np.abs(sinusoidal_positions(50, 6).data) <= 1.0)


def test_causal_mask_respects_padding():
    mask = causal_mask(np.array([[True, True, False]]))
    assert mask[0].tolist() == [
        [True, False, False],
        [True, True, False],
        [True, True, False],
    ]


def test_encoder_padding_invariance(float64):
    """Test an utterance encodes the same alone and padded inside a batch."""
    rng = np.random.default_rng(0)
    encoder = Encoder(2, 8, 2, 16, 0.0, rng)
    encoder.eval()
    x = rng.standard_normal((1, 4, 8))
    other = rng.standard_normal((1, 6, 8))
    padded = np.zeros((2, 6, 8))
    padded[0, :4] = x[0]
    padded[1] = other[0]
    valid = np.array([[True] * 4 + [False] * 2, [True] * 6])

    alone = encoder(Tensor(x), np.ones((1, 4), dtype=bool)).data
    batched = encoder(Tensor(padded), valid).data
    np.testing.assert_allclose(batched[0, :4], alone[0], atol=1e-5)


def test_decoder_is_causal(float64):
    """Test changing target j > i leaves output i unchanged."""
    rng = np.random.default_rng(1)
    decoder = Decoder(1, 8, 2, 16, 0.0, rng)
    decoder.eval()
    memory = Tensor(rng.standard_normal((1, 5, 8)))
    memory_valid = np.ones((1, 5), dtype=bool)
    y = rng.standard_normal((1, 4, 8))
    valid = np.ones((1, 4), dtype=bool)
    changed = y.copy()
    changed[0, 3] += 10.0

    a = decoder(Tensor(y), memory, valid, memory_valid).data
    b = decoder(Tensor(changed), memory, valid, memory_valid).data
    np.testing.assert_array_equal(a[0, :3], b[0, :3])
    assert not np.allclose(a[0, 3], b[0, 3])


def test_length_one_sequences(rng):
    encoder = Encoder(1, 8, 2, 16, 0.0, rng)
    out = encoder(Tensor(rng.standard_normal((2, 1, 8))), np.ones((2, 1), dtype=bool))
    assert out.shape == (2, 1, 8)


def test_mask_length_mismatch(rng):
    encoder = Encoder(1, 8, 2, 16, 0.0, rng)
    with pytest.raises(DimensionError, match="padding mask"):
        encoder(Tensor(np.zeros((1, 3, 8))), np.ones((1, 4), dtype=bool))


def test_dropout_only_in_train_mode(rng):
    """Test eval mode is deterministic and train mode is not."""
    encoder = Encoder(1, 8, 2, 16, 0.5, rng)
    x = Tensor(rng.standard_normal((1, 3, 8)))
    valid = np.ones((1, 3), dtype=bool)
    encoder.eval()
    np.testing.assert_array_equal(encoder(x, valid).data, encoder(x, valid).data)
    encoder.train()
    assert not np.array_equal(encoder(x, valid).data, encoder(x, valid).data)
