"""Tests for checkpoint save/load."""

import numpy as np
import pytest

from avasr.exceptions import VersionError
from avasr.models import TrainConfig
from avasr.network import (
    AVASRModel,
    check_config,
    load_checkpoint,
    load_parameters,
    restore_model,
    save_checkpoint,
)
from avasr.tokenizer import BpeModel, CharVocab


@pytest.fixture
def tokenizers():
    return CharVocab(list("abc ") + ["d"]), BpeModel(["a", "b", "▁"], [])


@pytest.fixture
def saved(tmp_path, toy_config, tokenizers):
    model = AVASRModel(toy_config, seed=4)
    path = tmp_path / "ckpt" / "best.ckpt"
    save_checkpoint(
        path,
        model,
        optimizer_state={"m.alpha": np.ones(()), "v.alpha": np.zeros(())},
        meta={"seed": 4, "epoch": 3},
        train_config=TrainConfig(gamma=0.3),
        char_vocab=tokenizers[0],
        bpe=tokenizers[1],
    )
    return path, model


def test_round_trip(saved):
    """Test parameters, optimizer state, metadata and tokenizers survive."""
    path, model = saved
    checkpoint = load_checkpoint(path)
    for name, param in model.named_parameters():
        np.testing.assert_array_equal(checkpoint.params[name], param.data)
    assert set(checkpoint.optimizer) == {"m.alpha", "v.alpha"}
    assert checkpoint.meta["epoch"] == 3
    assert checkpoint.train_config.gamma == 0.3
    assert checkpoint.char_vocab.graphemes == ["a", "b", "c", " ", "d"]
    assert len(checkpoint.bpe) == 7


def test_restore_model(saved):
    path, model = saved
    restored = restore_model(load_checkpoint(path), fusion_enabled=False)
    assert not restored.config.fusion_enabled
    np.testing.assert_array_equal(restored.alpha.data, model.alpha.data)
    assert restored.rng.bit_generator.state == model.rng.bit_generator.state


def test_no_temp_files_left(saved):
    path, _ = saved
    assert [p.name for p in path.parent.iterdir()] == ["best.ckpt"]


def test_unknown_version(saved):
    path, _ = saved
    raw = bytearray(path.read_bytes())
    raw[0] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionError) as exc:
        load_checkpoint(path)
    assert exc.value.error_code == "UNSUPPORTED_FORMAT"
    assert exc.value.details == {"found": 9, "expected": 1}


def test_corrupt_header(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"\x01\x05\x00\x00\x00{oops")
    with pytest.raises(VersionError) as exc:
        load_checkpoint(path)
    assert exc.value.error_code == "CORRUPT_HEADER"


def test_config_mismatch(saved, toy_config):
    """Test architecture fields must match; runtime flags may differ."""
    path, _ = saved
    with pytest.raises(VersionError) as exc:
        load_checkpoint(path, expected=toy_config.model_copy(update={"d_ff": 32}))
    assert exc.value.error_code == "CONFIG_MISMATCH"
    assert exc.value.details["d_ff"] == {"checkpoint": 16, "requested": 32}

    runtime = toy_config.model_copy(update={"fusion_enabled": False, "dropout": 0.3})
    check_config(toy_config, runtime)


def test_tokenizer_mismatch(tmp_path, toy_config):
    path = tmp_path / "x.ckpt"
    save_checkpoint(path, AVASRModel(toy_config), char_vocab=CharVocab(list("abcdef")))
    with pytest.raises(VersionError) as exc:
        load_checkpoint(path)
    assert exc.value.error_code == "TOKENIZER_MISMATCH"


def test_parameter_mismatch(saved, toy_config):
    path, _ = saved
    params = dict(load_checkpoint(path).params)
    params.pop("alpha")
    with pytest.raises(VersionError) as exc:
        load_parameters(AVASRModel(toy_config), params)
    assert exc.value.details["missing"] == ["alpha"]
