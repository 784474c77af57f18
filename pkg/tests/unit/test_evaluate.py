"""Tests for test-set decoding, scoring and report files."""

import importlib
import math
from dataclasses import replace

import numpy as np
import pytest

from avasr.data import Example
from avasr.decode import (
    Decoded,
    decode_examples,
    evaluate,
    format_report_table,
    read_report_tsv,
    score,
    write_report_tsv,
)
from avasr.exceptions import ConfigurationError
from avasr.models import DecodeConfig
from avasr.network import AVASRModel
from avasr.tokenizer import BOS_ID, EOS_ID, PAD_ID, UNK_ID, BpeModel, CharVocab


evaluate_module = importlib.import_module("avasr.decode.evaluate")

DECODE = DecodeConfig(beam_size=2, max_decode_len=4, resolution="char")


@pytest.fixture
def tokenizers():
    return CharVocab(list("ab c") + ["d"]), BpeModel(["a", "b", "▁"], [])


@pytest.fixture
def model(toy_config):
    return AVASRModel(toy_config, seed=2)


@pytest.fixture
def examples(toy_config):
    rng = np.random.default_rng(5)
    return [
        Example(
            id=utt_id,
            audio=rng.standard_normal((frames, toy_config.audio_dim)).astype(np.float32),
            video=rng.standard_normal((1, toy_config.video_dim)).astype(np.float32),
            char_ids=[BOS_ID, 4, EOS_ID],
            subword_ids=[BOS_ID, 4, EOS_ID],
            reference="a b",
        )
        for utt_id, frames in [("u3", 4), ("u1", 3), ("u2", 5)]
    ]


def hypotheses(decoded):
    return [d.hypothesis for d in decoded]


def test_results_ordered_by_id(model, examples, tokenizers):
    decoded = decode_examples(model, examples, *tokenizers, DECODE)
    assert [d.id for d in decoded] == ["u1", "u2", "u3"]
    assert all(d.error is None for d in decoded)


def test_special_ids_never_decoded(model, examples, tokenizers, monkeypatch):
    """Test PAD, BOS and UNK stay out of hypotheses even when the head prefers them."""
    chosen = []
    search = evaluate_module.beam_search

    def recording_search(*args, **kwargs):
        result = search(*args, **kwargs)
        chosen.append(result.best.tokens[1:])
        return result

    monkeypatch.setattr(evaluate_module, "beam_search", recording_search)
    model.char_head.bias.data[UNK_ID] += 100.0
    model.char_head.bias.data[PAD_ID] += 90.0
    model.char_head.bias.data[BOS_ID] += 80.0
    decoded = decode_examples(model, examples, *tokenizers, DECODE)
    assert all(d.error is None for d in decoded)
    assert len(chosen) == 3
    assert all(token not in (PAD_ID, BOS_ID, UNK_ID) for tokens in chosen for token in tokens)


@pytest.mark.parametrize(
    "mode", ["full", "audio_only_zeros", "audio_only_gaussian", "audio_only_gate"]
)
def test_every_mode_runs(model, examples, tokenizers, mode):
    report = evaluate(model, examples, *tokenizers, DECODE, mode=mode, seed=1)
    assert report.mode == mode
    assert len(report.utterances) == 3
    assert report.sigma == (0.2 if mode == "audio_only_gaussian" else None)


def test_gaussian_mode_is_reproducible(model, examples, tokenizers):
    """Test noise depends on the seed and utterance index, not on the worker count."""
    serial = decode_examples(model, examples, *tokenizers, DECODE, "audio_only_gaussian", 7)
    again = decode_examples(model, examples, *tokenizers, DECODE, "audio_only_gaussian", 7)
    parallel = decode_examples(
        model,
        examples,
        *tokenizers,
        DECODE.model_copy(update={"decode_workers": 3}),
        "audio_only_gaussian",
        7,
    )
    assert hypotheses(serial) == hypotheses(again) == hypotheses(parallel)


def test_gate_mode_matches_audio_only_model(toy_config, model, examples, tokenizers):
    audio_only = AVASRModel(toy_config.model_copy(update={"fusion_enabled": False}), seed=2)
    gated = decode_examples(model, examples, *tokenizers, DECODE, "audio_only_gate")
    plain = decode_examples(audio_only, examples, *tokenizers, DECODE)
    assert hypotheses(gated) == hypotheses(plain)


def test_failures_are_captured(model, examples, tokenizers):
    """Test one bad utterance is reported without stopping the others."""
    broken = replace(examples[0], video=None)
    decoded = decode_examples(model, [broken, *examples[1:]], *tokenizers, DECODE)
    failed = [d for d in decoded if d.error]
    assert [d.id for d in failed] == ["u3"]
    assert "MISSING_VIDEO" in failed[0].error
    report = score(decoded, "full", "char")
    assert [u.id for u in report.failed] == ["u3"]


def test_zeros_mode_covers_missing_video(model, examples, tokenizers):
    bare = [replace(e, video=None) for e in examples]
    decoded = decode_examples(model, bare, *tokenizers, DECODE, "audio_only_zeros")
    assert all(d.error is None for d in decoded)


def test_unknown_mode(model, examples, tokenizers):
    with pytest.raises(ConfigurationError) as exc:
        decode_examples(model, examples, *tokenizers, DECODE, "video_only")
    assert exc.value.error_code == "INVALID_EVAL_MODE"


class TestScore:
    @pytest.fixture
    def report(self):
        decoded = [
            Decoded("a", "the cat sat", "the cat sat", False),
            Decoded("b", "a dog", "a big dog ran", True),
            Decoded("c", "", "noise", False),
        ]
        return score(decoded, "audio_only_gaussian", "subword", sigma=0.2, seed=3)

    def test_corpus_wer_pools_edits(self, report):
        assert report.reference_words == 5
        assert (report.substitutions, report.insertions, report.deletions) == (0, 3, 0)
        assert report.corpus_wer == pytest.approx(3 / 5)
        assert math.isinf(report.utterances[2].wer)

    def test_tsv_round_trip(self, report, tmp_path):
        path = tmp_path / "out" / "report.tsv"
        write_report_tsv(report, path)
        assert path.read_text(encoding="utf-8").startswith("# mode=audio_only_gaussian\t")
        assert read_report_tsv(path) == report

    def test_bad_report(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("id\thyp\n", encoding="utf-8")
        with pytest.raises(ConfigurationError) as exc:
            read_report_tsv(path)
        assert exc.value.error_code == "BAD_REPORT"

    def test_table(self, report):
        table = format_report_table(report)
        assert "[truncated]" in table
        assert table.splitlines()[-1].startswith("corpus WER 60.00% (S=0 I=3 D=0 N=5)")
