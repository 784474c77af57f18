"""Tests for the command-line interface."""

import pytest

from avasr.cli import run
from avasr.data import load_manifest, read_features
from avasr.decode import Decoded, score, write_report_tsv


def test_usage_errors_exit_2(capsys):
    assert run([]) == 2
    assert run(["train", "--dev", "dev.tsv"]) == 2
    assert run(["synth", "--out", "x", "--seed", "abc"]) == 2
    assert "usage: avasr" in capsys.readouterr().err


def test_malformed_set_exits_2(synth_corpus, tmp_path, capsys):
    args = ["tokenize-train", str(synth_corpus.corpus), "--out", str(tmp_path)]
    code = run([*args, "--set", "gamma"])
    assert code == 2
    assert "KEY=VALUE" in capsys.readouterr().err


def test_unknown_key_exits_1(synth_corpus, tmp_path, capsys):
    args = ["tokenize-train", str(synth_corpus.corpus), "--out", str(tmp_path)]
    code = run([*args, "--set", "beam=3"])
    assert code == 1
    assert "UNKNOWN_CONFIG_KEY" in capsys.readouterr().err


def test_synth_is_byte_identical(tmp_path):
    """Test the same seed writes the same files twice."""
    assert run(["synth", "--out", str(tmp_path / "a"), "--seed", "4", "--utterances", "8"]) == 0
    assert run(["synth", "--out", str(tmp_path / "b"), "--seed", "4", "--utterances", "8"]) == 0
    for name in ["corpus.tsv", "heldout.tsv", "audio/utt007.feat", "video/utt000.feat"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_tokenize_train(synth_corpus, tmp_path):
    out = tmp_path / "tok"
    args = ["tokenize-train", str(synth_corpus.corpus), "--subword-size", "30"]
    assert run([*args, "--out", str(out)]) == 0
    assert (out / "char.vocab").exists() and (out / "bpe.model").exists()
    assert (out / "resolved_config.toml").exists()


def test_tokenize_train_from_text(tmp_path):
    corpus = tmp_path / "lines.txt"
    corpus.write_text("the cat sat\nthe cat ran\n", encoding="utf-8")
    args = ["tokenize-train", str(corpus), "--text", "--subword-size", "12"]
    assert run([*args, "--out", str(tmp_path / "t")]) == 0
    assert (tmp_path / "t" / "bpe.model").exists()


def test_prep_stack(synth_corpus, tmp_path):
    out = tmp_path / "prep"
    code = run(["prep", str(synth_corpus.heldout), "--strategy", "stack", "--out", str(out)])
    assert code == 0
    records = load_manifest(out / "manifest.tsv")
    assert len(records) == 6
    assert read_features(records[0].audio_path).shape[1] == 43 * 4


def test_prep_filter_records_setting(synth_corpus, tmp_path):
    out = tmp_path / "prep"
    args = ["prep", str(synth_corpus.corpus), "--strategy", "filter", "--max-seconds", "0.5"]
    code = run([*args, "--out", str(out)])
    assert code == 0
    assert load_manifest(out / "manifest.tsv") == []
    assert "max_seconds = 0.5" in (out / "resolved_config.toml").read_text(encoding="utf-8")


def test_compare(tmp_path, capsys):
    baseline = score([Decoded("a", "a b c d", "a x c d", False)], "full", "subword")
    system = score([Decoded("a", "a b c d", "a b c d", False)], "full", "subword")
    write_report_tsv(baseline, tmp_path / "base.tsv")
    write_report_tsv(system, tmp_path / "sys.tsv")
    assert run(["compare", str(tmp_path / "base.tsv"), str(tmp_path / "sys.tsv")]) == 0
    assert "relative improvement 100.00%" in capsys.readouterr().out


def test_compare_zero_baseline(tmp_path, capsys):
    perfect = score([Decoded("a", "a", "a", False)], "full", "subword")
    write_report_tsv(perfect, tmp_path / "r.tsv")
    assert run(["compare", str(tmp_path / "r.tsv"), str(tmp_path / "r.tsv")]) == 1
    assert "ZERO_BASELINE" in capsys.readouterr().err


@pytest.mark.slow
def test_selfcheck(capsys):
    assert run(["selfcheck", "--seeds", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok") >= 5
    assert "FAIL" not in out
