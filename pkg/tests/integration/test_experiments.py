"""Seeded factor comparisons on the synthetic corpus.

Both checks are directional: medians over five seeds, no effect size.
"""

import pytest

from avasr.data import load_manifest
from avasr.experiments import run_ablation


pytestmark = pytest.mark.slow

SEEDS = [0, 1, 2, 3, 4]

ABLATE = {
    "d_model": 32,
    "heads": 4,
    "enc_layers": 1,
    "dec_layers": 1,
    "d_ff": 64,
    "dropout": 0.0,
    "subword_vocab_size": 48,
    "label_smoothing": 0.0,
    "schedule": "constant",
    "base_lr": 3e-3,
    "max_epochs": 150,
    "patience": 20,
    "beam_size": 1,
}


@pytest.fixture
def split(synth_corpus):
    return load_manifest(synth_corpus.train), load_manifest(synth_corpus.heldout)


def by_value(summaries):
    return {s.value: s for s in summaries}


def test_multiresolution_converges_no_slower(split, tmp_path):
    """Test gamma=0.5 reaches its best epoch no later and scores no worse than gamma=1."""
    train, heldout = split
    summaries = by_value(
        run_ablation("gamma", [0.5, 1.0], SEEDS, train, heldout, tmp_path, overrides=ABLATE)
    )
    mixed, subword_only = summaries[0.5], summaries[1.0]
    assert len(mixed.runs) == len(subword_only.runs) == 5
    assert mixed.median_epochs_to_best <= subword_only.median_epochs_to_best
    assert mixed.median_wer <= subword_only.median_wer
    assert (tmp_path / "ablation.tsv").read_text(encoding="utf-8").count("\n") == 3


def test_fusion_scores_no_worse(split, tmp_path):
    """Test video fusion resolves homophones at least as well as audio alone."""
    train, heldout = split
    summaries = by_value(
        run_ablation("fusion", [True, False], SEEDS, train, heldout, tmp_path, overrides=ABLATE)
    )
    assert summaries[True].median_wer <= summaries[False].median_wer
