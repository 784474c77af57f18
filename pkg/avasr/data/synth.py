"""Synthetic audio-visual corpus.

Words are rendered to "audio" through a pronunciation lexicon: every
pronunciation symbol owns a random feature prototype held for a few frames
plus noise. Homophone pairs such as ``layup``/``layoff`` share a
pronunciation, so their audio is identically distributed and only the topic
carried by the pooled "video" vector tells them apart.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from avasr.data.features import write_features
from avasr.data.manifest import serialize_manifest
from avasr.models import UtteranceRecord


logger = logging.getLogger(__name__)

TOPICS: dict[str, list[str]] = {
    "sports": ["player", "scored", "layup", "court", "coach", "team", "game", "fast"],
    "office": ["manager", "announced", "layoff", "caught", "report", "team", "budget", "fast"],
}
HOMOPHONES: dict[str, str] = {
    "layup": "leiop",
    "layoff": "leiop",
    "court": "kort",
    "caught": "kort",
}


def pronounce(word: str) -> str:
    return HOMOPHONES.get(word, word)


@dataclass(frozen=True)
class SynthCorpus:
    root: Path
    corpus: Path
    train: Path
    heldout: Path


def _sentence(rng: np.random.Generator, topic: str) -> list[str]:
    lexicon = TOPICS[topic]
    ambiguous = [w for w in lexicon if w in HOMOPHONES]
    plain = [w for w in lexicon if w not in HOMOPHONES]
    n_plain = int(rng.integers(2, 5))
    chosen = [ambiguous[int(rng.integers(len(ambiguous)))]]
    chosen += [plain[i] for i in rng.choice(len(plain), size=n_plain, replace=False)]
    return [chosen[i] for i in rng.permutation(len(chosen))]


def generate_corpus(
    out_dir: Path,
    seed: int = 0,
    n_utterances: int = 30,
    heldout: int = 6,
    feature_dim: int = 43,
    video_dim: int = 2048,
    frames_per_symbol: int = 4,
    noise: float = 0.1,
    video_noise: float = 0.3,
    frame_step_s: float = 0.01,
) -> SynthCorpus:
    """Write a seeded corpus under ``out_dir``.

    Produces ``audio/*.feat``, ``video/*.feat`` and three manifests with
    paths relative to ``out_dir``: ``corpus.tsv`` (all utterances),
    ``train.tsv`` and ``heldout.tsv`` (the last ``heldout`` utterances).
    Identical arguments give byte-identical files.
    """
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    spoken_chars = {ch for words in TOPICS.values() for w in words for ch in pronounce(w)}
    symbols = sorted(spoken_chars | {" "})
    prototypes = {s: rng.standard_normal(feature_dim) for s in symbols}
    topic_vectors = {t: rng.standard_normal(video_dim) for t in TOPICS}
    topics = list(TOPICS)

    records = []
    for i in range(n_utterances):
        topic = topics[i % len(topics)]
        words = _sentence(rng, topic)
        spoken = " ".join(pronounce(w) for w in words)
        frames = np.repeat(
            np.stack([prototypes[ch] for ch in spoken]), frames_per_symbol, axis=0
        )
        frames = frames + noise * rng.standard_normal(frames.shape)
        video = topic_vectors[topic] + video_noise * rng.standard_normal(video_dim)

        utt_id = f"utt{i:03d}"
        audio_rel = Path("audio") / f"{utt_id}.feat"
        video_rel = Path("video") / f"{utt_id}.feat"
        write_features(out_dir / audio_rel, frames)
        write_features(out_dir / video_rel, video[None, :])
        records.append(
            UtteranceRecord(
                id=utt_id,
                audio_path=audio_rel,
                video_path=video_rel,
                transcript=" ".join(words),
                duration_s=round(frames.shape[0] * frame_step_s, 6),
                frame_step_s=frame_step_s,
            )
        )

    split = len(records) - heldout
    corpus = SynthCorpus(
        root=out_dir,
        corpus=out_dir / "corpus.tsv",
        train=out_dir / "train.tsv",
        heldout=out_dir / "heldout.tsv",
    )
    serialize_manifest(records, corpus.corpus)
    serialize_manifest(records[:split], corpus.train)
    serialize_manifest(records[split:], corpus.heldout)
    logger.info(
        "Synthesized corpus seed=%d utterances=%d train=%d heldout=%d at %s",
        seed,
        len(records),
        split,
        len(records) - split,
        out_dir,
    )
    return corpus
