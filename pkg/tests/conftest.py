"""Pytest configuration and fixtures."""

import os

import numpy as np
import pytest

from avasr.data import generate_corpus
from avasr.selfcheck import toy_batch as make_toy_batch
from avasr.selfcheck import toy_config as make_toy_config
from avasr.tensor import default_dtype


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """Keep user/project config files, AVASR_* variables and precision out of tests."""
    home = tmp_path / "home"
    home.mkdir()
    monkeypatch.setenv("HOME", str(home))
    monkeypatch.chdir(tmp_path)
    for key in list(os.environ):
        if key.startswith("AVASR_"):
            monkeypatch.delenv(key)
    with default_dtype("float32"):
        yield


@pytest.fixture
def float64():
    """Run a test in 64-bit precision."""
    with default_dtype("float64"):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def toy_config():
    """Width-8 network with one layer per stack."""
    return make_toy_config()


@pytest.fixture
def toy_batch(toy_config, rng):
    """Two utterances of 5 and 3 frames with random targets."""
    return make_toy_batch(toy_config, rng)


@pytest.fixture
def synth_corpus(tmp_path):
    """The seeded synthetic corpus (30 utterances, 6 held out)."""
    return generate_corpus(tmp_path / "synth", seed=0)
