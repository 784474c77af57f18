"""Tests for manifests, feature files, preprocessing, batching and the synthetic corpus."""

import struct

import numpy as np
import pydantic
import pytest

from avasr.data import (
    Example,
    chunk_records,
    collate,
    filter_long,
    format_record,
    generate_corpus,
    load_example,
    load_examples,
    load_manifest,
    make_batches,
    plan_batches,
    read_features,
    retained_fraction,
    serialize_manifest,
    stack_frames,
    stack_records,
    unstack_frames,
    validate_spans,
    write_features,
)
from avasr.exceptions import (
    AVASRError,
    ConfigurationError,
    DimensionError,
    IngestionError,
    ValidationError,
)
from avasr.models import ChunkSpan, UtteranceRecord
from avasr.tokenizer import BOS_ID, EOS_ID, PAD_ID, CharVocab, train_bpe


def record(utt_id="u1", duration=1.0, **kwargs):
    fields = {"audio_path": f"{utt_id}.feat", "transcript": "a b", "duration_s": duration}
    return UtteranceRecord(id=utt_id, **{**fields, **kwargs})


def example(utt_id, frames, video=None, n_chars=3):
    return Example(
        id=utt_id,
        audio=np.full((frames, 2), float(frames), dtype=np.float32),
        video=video,
        char_ids=[BOS_ID, *range(4, 4 + n_chars), EOS_ID],
        subword_ids=[BOS_ID, 4, EOS_ID],
        reference="x",
    )


class TestFeatures:
    def test_round_trip(self, tmp_path, rng):
        matrix = rng.standard_normal((7, 3)).astype(np.float32)
        path = tmp_path / "a.feat"
        write_features(path, matrix)
        assert path.stat().st_size == 16 + 7 * 3 * 4
        np.testing.assert_array_equal(read_features(path), matrix)

    @pytest.mark.parametrize(
        "payload, code",
        [
            (b"AVF", "FEATURE_TRUNCATED"),
            (b"XXXX" + bytes(12), "FEATURE_BAD_MAGIC"),
            (b"AVFT" + struct.pack("<III", 2, 1, 0) + bytes(4), "FEATURE_SIZE_MISMATCH"),
        ],
    )
    def test_corrupt_files(self, tmp_path, payload, code):
        path = tmp_path / "bad.feat"
        path.write_bytes(payload)
        with pytest.raises(IngestionError) as exc:
            read_features(path)
        assert exc.value.error_code == code

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError) as exc:
            read_features(tmp_path / "none.feat")
        assert exc.value.error_code == "FEATURE_READ_ERROR"

    def test_rejects_non_matrix(self, tmp_path):
        with pytest.raises(IngestionError):
            write_features(tmp_path / "v.feat", np.zeros(4))


class TestManifest:
    @pytest.fixture
    def manifest(self, tmp_path):
        write_features(tmp_path / "a.feat", np.zeros((100, 3)))
        write_features(tmp_path / "v.feat", np.zeros((1, 5)))
        lines = [
            "u1\ta.feat\tv.feat\t1.0\tHello there",
            "",
            "u2\ta.feat\t-\t1.0\tno video\t0:40:no|40:100:video",
        ]
        path = tmp_path / "m.tsv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_load(self, manifest, tmp_path):
        records = load_manifest(manifest)
        assert [r.id for r in records] == ["u1", "u2"]
        assert records[0].audio_path == tmp_path / "a.feat"
        assert records[0].has_video and not records[1].has_video
        assert records[1].chunk_spans[1] == ChunkSpan(start_frame=40, end_frame=100, text="video")

    def test_serialize_round_trip(self, manifest, tmp_path):
        records = load_manifest(manifest)
        out = tmp_path / "copy" / "m.tsv"
        serialize_manifest(records, out)
        assert load_manifest(out) == records
        assert format_record(records[1]).endswith("\t0:40:no|40:100:video")

    def test_frame_step_round_trip(self, tmp_path):
        audio = tmp_path / "s.feat"
        write_features(audio, np.zeros((10, 172), dtype=np.float32))
        stacked = record("s1", duration=0.4, audio_path=audio, frame_step_s=0.04)
        assert format_record(stacked).split("\t")[5:] == ["", "0.04"]
        out = tmp_path / "m.tsv"
        serialize_manifest([stacked, record("s2", audio_path=audio)], out)
        loaded = load_manifest(out)
        assert [r.frame_step_s for r in loaded] == [0.04, 0.01]
        assert len(format_record(loaded[1]).split("\t")) == 5

    def test_span_text_rejects_separator(self):
        with pytest.raises(pydantic.ValidationError, match="separator"):
            ChunkSpan(start_frame=0, end_frame=4, text="a|b")

    def test_malformed_line_reports_line_number(self, manifest):
        manifest.write_text(manifest.read_text() + "u3\ta.feat\n", encoding="utf-8")
        with pytest.raises(IngestionError) as exc:
            load_manifest(manifest)
        assert exc.value.error_code == "MALFORMED_LINE"
        assert exc.value.details["line"] == 4

    def test_skip_invalid(self, manifest, caplog):
        manifest.write_text(
            manifest.read_text() + "u3\tmissing.feat\t-\t1.0\tx\nu1\ta.feat\t-\t1.0\tdup\n",
            encoding="utf-8",
        )
        records = load_manifest(manifest, skip_invalid=True)
        assert [r.id for r in records] == ["u1", "u2"]
        assert "MISSING_AUDIO" in caplog.text
        assert "DUPLICATE_ID" in caplog.text

    def test_missing_video_file(self, manifest, tmp_path):
        (tmp_path / "v.feat").unlink()
        with pytest.raises(IngestionError) as exc:
            load_manifest(manifest)
        assert exc.value.error_code == "MISSING_VIDEO"
        assert exc.value.details["id"] == "u1"

    def test_overlapping_spans(self, manifest):
        manifest.write_text("u1\ta.feat\t-\t1.0\tx y\t0:50:x|40:90:y\n", encoding="utf-8")
        with pytest.raises(IngestionError, match="overlaps"):
            load_manifest(manifest)

    def test_unreadable_manifest(self, tmp_path):
        with pytest.raises(IngestionError) as exc:
            load_manifest(tmp_path / "none.tsv")
        assert exc.value.error_code == "MANIFEST_READ_ERROR"


def test_validate_spans_bounds():
    spans = [ChunkSpan(start_frame=0, end_frame=5, text="a")]
    validate_spans(spans, n_frames=5)
    with pytest.raises(ValidationError) as exc:
        validate_spans(spans, n_frames=4)
    assert exc.value.error_code == "SPAN_OUT_OF_BOUNDS"


class TestPreprocess:
    def test_filter_is_inclusive(self):
        records = [record("a", 15.0), record("b", 15.01), record("c", 3.0)]
        kept = filter_long(records, 15.0)
        assert [r.id for r in kept] == ["a", "c"]
        assert retained_fraction(records, kept) == pytest.approx(18.0 / 33.01)
        assert retained_fraction([], []) == 1.0

    def test_chunk(self, tmp_path, rng):
        features = rng.standard_normal((10, 3)).astype(np.float32)
        write_features(tmp_path / "u1.feat", features)
        spans = [
            ChunkSpan(start_frame=0, end_frame=4, text="a"),
            ChunkSpan(start_frame=6, end_frame=10, text="b"),
        ]
        source = record(audio_path=tmp_path / "u1.feat", duration=0.1, chunk_spans=spans)
        plain = record("u2", audio_path=tmp_path / "u1.feat", duration=0.1)

        out = chunk_records([source, plain], tmp_path / "chunks")
        assert [r.id for r in out] == ["u1-c0", "u1-c1", "u2"]
        assert [r.transcript for r in out[:2]] == ["a", "b"]
        assert out[0].duration_s == pytest.approx(0.04)
        np.testing.assert_array_equal(read_features(out[1].audio_path), features[6:10])

    def test_chunk_span_beyond_matrix(self, tmp_path):
        write_features(tmp_path / "u1.feat", np.zeros((3, 2)))
        spans = [ChunkSpan(start_frame=0, end_frame=4, text="a")]
        source = record(audio_path=tmp_path / "u1.feat", chunk_spans=spans)
        with pytest.raises(ValidationError):
            chunk_records([source], tmp_path / "chunks")

    @pytest.mark.parametrize("frames, k", [(8, 4), (10, 4), (3, 4), (5, 1)])
    def test_stack_unstack(self, rng, frames, k):
        """Test stacking pads to ceil(T/k) rows and unstacking recovers the input."""
        features = rng.standard_normal((frames, 3))
        stacked = stack_frames(features, k)
        assert stacked.shape == (-(-frames // k), 3 * k)
        np.testing.assert_array_equal(unstack_frames(stacked, k, frames), features)
        if k > 1:
            np.testing.assert_array_equal(stacked[0, 3:6], features[1])

    def test_stack_zero_pads_tail(self):
        stacked = stack_frames(np.ones((5, 2)), 4)
        assert stacked[1].tolist() == [1, 1, 0, 0, 0, 0, 0, 0]

    def test_invalid_stack_factor(self):
        with pytest.raises(ConfigurationError):
            stack_frames(np.ones((5, 2)), 0)

    def test_stack_records(self, tmp_path):
        write_features(tmp_path / "u1.feat", np.ones((9, 2)))
        source = record(audio_path=tmp_path / "u1.feat", duration=0.09)
        out = stack_records([source], tmp_path / "s", 3)
        assert read_features(out[0].audio_path).shape == (3, 6)
        assert out[0].frame_step_s == pytest.approx(0.03)


class TestLoadExample:
    @pytest.fixture
    def tokenizers(self):
        return CharVocab.from_corpus(["a b"]), train_bpe(["a b"], 4)

    def test_raw_and_prestacked_agree(self, tmp_path, rng, tokenizers):
        raw = rng.standard_normal((8, 3)).astype(np.float32)
        write_features(tmp_path / "raw.feat", raw)
        write_features(tmp_path / "stk.feat", stack_frames(raw, 2))
        kwargs = {"feature_dim": 3, "stack_factor": 2, "video_dim": 5}
        a = load_example(
            record(audio_path=tmp_path / "raw.feat", duration=0.08), *tokenizers, **kwargs
        )
        b = load_example(
            record(audio_path=tmp_path / "stk.feat", duration=0.08), *tokenizers, **kwargs
        )
        np.testing.assert_array_equal(a.audio, b.audio)
        assert a.frames == 4
        assert a.char_ids[0] == BOS_ID and a.char_ids[-1] == EOS_ID
        assert a.reference == "a b"

    def test_width_mismatch(self, tmp_path, tokenizers):
        write_features(tmp_path / "u1.feat", np.zeros((8, 5)))
        with pytest.raises(ConfigurationError) as exc:
            load_example(
                record(audio_path=tmp_path / "u1.feat", duration=0.08),
                *tokenizers,
                feature_dim=3,
                stack_factor=2,
            )
        assert exc.value.error_code == "FEATURE_DIM_MISMATCH"

    def test_duration_mismatch(self, tmp_path, tokenizers):
        write_features(tmp_path / "u1.feat", np.zeros((8, 3)))
        with pytest.raises(IngestionError) as exc:
            load_example(
                record(audio_path=tmp_path / "u1.feat", duration=2.0),
                *tokenizers,
                feature_dim=3,
                stack_factor=2,
            )
        assert exc.value.error_code == "DURATION_MISMATCH"

    def test_video_width_mismatch(self, tmp_path, tokenizers):
        write_features(tmp_path / "u1.feat", np.zeros((8, 3)))
        write_features(tmp_path / "v.feat", np.zeros((1, 4)))
        rec = record(audio_path=tmp_path / "u1.feat", video_path=tmp_path / "v.feat", duration=0.08)
        with pytest.raises(ConfigurationError) as exc:
            load_example(rec, *tokenizers, feature_dim=3, stack_factor=2, video_dim=5)
        assert exc.value.error_code == "VIDEO_DIM_MISMATCH"

    def test_read_error_names_record(self, tmp_path, tokenizers):
        with pytest.raises(IngestionError) as exc:
            load_example(record("lost", audio_path=tmp_path / "none.feat"), *tokenizers)
        assert exc.value.details["id"] == "lost"
        assert str(exc.value).startswith("lost:")

    def test_parallel_load_keeps_order(self, synth_corpus):
        records = load_manifest(synth_corpus.corpus)
        vocab = CharVocab.from_corpus(r.transcript for r in records)
        bpe = train_bpe([r.transcript for r in records], 40)
        examples = load_examples(records, vocab, bpe, workers=4)
        assert [e.id for e in examples] == [r.id for r in records]
        assert examples[0].audio.shape[1] == 43 * 4
        assert examples[0].video.shape == (1, 2048)


class TestBatching:
    def test_plan_respects_budget(self):
        """Test every example lands in exactly one batch and padding stays in budget."""
        examples = [example(f"e{i}", frames) for i, frames in enumerate([3, 9, 4, 4, 7, 2, 8, 5])]
        groups = plan_batches(examples, 16, shuffle_seed=1)
        assert sorted(e.id for g in groups for e in g) == sorted(e.id for e in examples)
        for group in groups:
            assert max(e.frames for e in group) * len(group) <= 16

    def test_plan_order_is_seeded(self):
        examples = [example(f"e{i}", i + 1) for i in range(12)]
        def ids(seed):
            return [[e.id for e in g] for g in plan_batches(examples, 30, seed)]

        assert ids(3) == ids(3)
        assert sorted(map(tuple, ids(3))) == sorted(map(tuple, ids(4)))

    def test_over_budget(self):
        with pytest.raises(IngestionError) as exc:
            plan_batches([example("big", 20)], 16)
        assert exc.value.error_code == "OVER_FRAME_BUDGET"

    def test_make_batches_conserves_utterances(self, synth_corpus):
        """Test every utterance id appears in exactly one batch."""
        records = load_manifest(synth_corpus.corpus)
        vocab = CharVocab.from_corpus(r.transcript for r in records)
        bpe = train_bpe([r.transcript for r in records], 40)
        ids = [
            utt_id
            for batch in make_batches(records, vocab, bpe, 200, shuffle_seed=5, workers=2)
            for utt_id in batch.ids
        ]
        assert sorted(ids) == sorted(r.id for r in records)
        assert len(ids) == len(set(ids)) == 30

    def test_collate_pads_and_masks(self):
        batch = collate([example("a", 3, np.ones((1, 4)), n_chars=1), example("b", 5, n_chars=3)])
        assert batch.audio.shape == (2, 5, 2)
        assert batch.audio_mask.sum(axis=1).tolist() == [3, 5]
        assert not batch.audio[0, 3:].any()
        assert batch.video_available.tolist() == [True, False]
        assert not batch.video[1].any()
        assert batch.char_targets[0].tolist() == [BOS_ID, 4, EOS_ID, PAD_ID, PAD_ID]
        assert batch.padding_frames == 2 and batch.real_frames == 8

    def test_teacher_forcing(self):
        batch = collate([example("a", 3, n_chars=1), example("b", 5, n_chars=3)])
        inputs, outputs, mask = batch.teacher_forcing("char")
        assert inputs[0].tolist() == [BOS_ID, 4, EOS_ID, PAD_ID]
        assert outputs[0].tolist() == [4, EOS_ID, PAD_ID, PAD_ID]
        assert mask[0].tolist() == [True, True, False, False]

    def test_subset_trims(self):
        batch = collate([example("a", 3, n_chars=1), example("b", 5, n_chars=3)])
        sub = batch.subset([0])
        assert sub.ids == ["a"]
        assert sub.audio.shape == (1, 3, 2)
        assert sub.char_targets.shape == (1, 3)

    def test_collate_errors(self):
        with pytest.raises(AVASRError) as exc:
            collate([])
        assert exc.value.error_code == "EMPTY_BATCH"
        with pytest.raises(DimensionError):
            collate([example("a", 2, np.ones((1, 4))), example("b", 2, np.ones((2, 4)))])


class TestSynth:
    def test_byte_identical_for_seed(self, tmp_path):
        a = generate_corpus(tmp_path / "a", seed=5, n_utterances=6, heldout=2)
        b = generate_corpus(tmp_path / "b", seed=5, n_utterances=6, heldout=2)
        for rel in ["corpus.tsv", "train.tsv", "audio/utt003.feat", "video/utt005.feat"]:
            assert (a.root / rel).read_bytes() == (b.root / rel).read_bytes()

    def test_split(self, synth_corpus):
        train = load_manifest(synth_corpus.train)
        heldout = load_manifest(synth_corpus.heldout)
        assert len(train) == 24 and len(heldout) == 6
        assert {r.id for r in train}.isdisjoint(r.id for r in heldout)

    def test_homophones_share_audio_prototypes(self, synth_corpus):
        """Test only the video vector separates the two topics' homophones."""
        records = load_manifest(synth_corpus.corpus)
        transcripts = " ".join(r.transcript for r in records)
        assert "layup" in transcripts and "layoff" in transcripts
        videos = [read_features(r.video_path)[0] for r in records[:4]]
        same_topic = np.linalg.norm(videos[0] - videos[2])
        other_topic = np.linalg.norm(videos[0] - videos[1])
        assert same_topic < other_topic
