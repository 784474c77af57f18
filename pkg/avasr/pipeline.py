"""Main AVASR pipeline facade."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np

from avasr.cache import FeatureCache
from avasr.config import Config
from avasr.data import (
    Example,
    chunk_records,
    filter_long,
    load_examples,
    read_features,
    stack_records,
)
from avasr.decode import Decoded, decode_examples, evaluate
from avasr.exceptions import ConfigurationError
from avasr.models import SPECIAL_TOKENS, AVASRConfig, EvalReport, UtteranceRecord
from avasr.network import AVASRModel, load_checkpoint, restore_model
from avasr.tensor import set_default_dtype
from avasr.tokenizer import BpeModel, CharVocab, train_bpe
from avasr.train import TrainResult, train_loop


logger = logging.getLogger(__name__)

Strategy = Literal["filter", "chunk", "stack"]
STRATEGIES: tuple[str, ...] = ("filter", "chunk", "stack")
CHAR_VOCAB_FILE = "char.vocab"
BPE_FILE = "bpe.model"


class Pipeline:
    """End-to-end recognizer: tokenizers, preprocessing, training and decoding.

    Example:
        >>> pipeline = Pipeline(overrides={"d_model": 64, "heads": 4})
        >>> pipeline.train_tokenizers(transcripts)
        >>> result = pipeline.train(train_records, dev_records)
        >>> report = pipeline.evaluate(test_records, mode="audio_only_gate")
    """

    def __init__(
        self,
        config: Config | None = None,
        overrides: dict[str, Any] | None = None,
        config_file: Path | None = None,
        config_env: str = "default",
    ):
        """Initialize pipeline.

        Args:
            config: Ready configuration (takes priority over the other arguments)
            overrides: Explicit configuration values
            config_file: Run config file
            config_env: Configuration table name (default: "default")
        """
        # Initialize configuration
        self._config = config or Config(overrides, config_file, config_env)
        set_default_dtype(self._config.train.precision)

        # Initialize cache
        self._cache: FeatureCache[np.ndarray] = FeatureCache(
            enabled=self._config.data.enable_cache,
            max_entries=self._config.data.cache_size,
        )

        self.char_vocab: CharVocab | None = None
        self.bpe: BpeModel | None = None
        self.model: AVASRModel | None = None

    @property
    def config(self) -> Config:
        """Get configuration."""
        return self._config

    @property
    def cache(self) -> FeatureCache[np.ndarray]:
        """Get cache instance."""
        return self._cache

    def _read(self, path: Path) -> np.ndarray:
        return self._cache.get_or_load(path, read_features)

    # Tokenizers

    def train_tokenizers(
        self, transcripts: Iterable[str], subword_symbols: int | None = None
    ) -> tuple[CharVocab, BpeModel]:
        """Extract the grapheme inventory and learn BPE merges.

        Args:
            transcripts: Training transcripts
            subword_symbols: Learned BPE symbols; defaults to the configured
                subword vocabulary minus the reserved ids
        """
        lines = list(transcripts)
        target = subword_symbols or self._config.model.subword_vocab_size - SPECIAL_TOKENS
        self.char_vocab = CharVocab.from_corpus(lines)
        self.bpe = train_bpe(lines, target)
        logger.info(
            "Tokenizers trained: graphemes=%d subwords=%d",
            len(self.char_vocab) - SPECIAL_TOKENS,
            self.bpe.num_symbols,
        )
        return self.char_vocab, self.bpe

    def save_tokenizers(self, out_dir: Path) -> tuple[Path, Path]:
        char_vocab, bpe = self._tokenizers()
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        char_path, bpe_path = out_dir / CHAR_VOCAB_FILE, out_dir / BPE_FILE
        char_vocab.save(char_path)
        bpe.save(bpe_path)
        return char_path, bpe_path

    def load_tokenizers(self, directory: Path) -> tuple[CharVocab, BpeModel]:
        directory = Path(directory)
        self.char_vocab = CharVocab.load(directory / CHAR_VOCAB_FILE)
        self.bpe = BpeModel.load(directory / BPE_FILE)
        return self.char_vocab, self.bpe

    def _tokenizers(self) -> tuple[CharVocab, BpeModel]:
        if self.char_vocab is None or self.bpe is None:
            raise ConfigurationError(
                "Tokenizers are not loaded; train or load them first",
                error_code="TOKENIZERS_MISSING",
            )
        return self.char_vocab, self.bpe

    # Data

    def prepare(
        self, records: Sequence[UtteranceRecord], strategy: Strategy, out_dir: Path
    ) -> list[UtteranceRecord]:
        """Apply one long-utterance strategy.

        Args:
            records: Raw manifest records
            strategy: ``filter`` drops records over ``max_seconds``; ``chunk``
                splits records along their chunk spans; ``stack`` writes
                frame-stacked copies
            out_dir: Directory for new feature files
        """
        data = self._config.data
        if strategy == "filter":
            return filter_long(records, data.max_seconds)
        if strategy == "chunk":
            return chunk_records(records, out_dir, reader=self._read)
        if strategy == "stack":
            return stack_records(records, out_dir, self._config.model.stack_factor, self._read)
        raise ConfigurationError(
            f"Unknown preprocessing strategy: {strategy}",
            error_code="INVALID_STRATEGY",
            details={"strategy": strategy, "allowed": list(STRATEGIES)},
        )

    def load_examples(self, records: Sequence[UtteranceRecord]) -> list[Example]:
        """Read features shaped for the current network.

        Input widths and the stacking factor come from the loaded model when
        there is one.
        """
        char_vocab, bpe = self._tokenizers()
        model = self.model.config if self.model is not None else self.model_config()
        data = self._config.data
        self._cache.prefetch(
            [p for r in records for p in (r.audio_path, r.video_path) if p is not None],
            read_features,
            workers=data.workers,
        )
        return load_examples(
            records,
            char_vocab,
            bpe,
            workers=data.workers,
            feature_dim=model.feature_dim,
            stack_factor=model.stack_factor,
            video_dim=model.video_dim,
            frame_step_s=data.frame_step_s,
            reader=self._read,
        )

    # Model

    def model_config(self) -> AVASRConfig:
        """Configured network with vocabulary sizes taken from the tokenizers."""
        config = self._config.model
        if self.char_vocab is None or self.bpe is None:
            return config
        return config.model_copy(
            update={"char_vocab_size": len(self.char_vocab), "subword_vocab_size": len(self.bpe)}
        )

    def build_model(self) -> AVASRModel:
        self.model = AVASRModel(self.model_config(), seed=self._config.train.seed)
        return self.model

    def load_checkpoint(self, path: Path, fusion_enabled: bool | None = None) -> AVASRModel:
        """Restore model and tokenizers from a checkpoint.

        Args:
            path: Checkpoint file
            fusion_enabled: Override the stored fusion flag
        """
        checkpoint = load_checkpoint(path)
        if checkpoint.char_vocab is not None and checkpoint.bpe is not None:
            self.char_vocab, self.bpe = checkpoint.char_vocab, checkpoint.bpe
        self.model = restore_model(checkpoint, fusion_enabled=fusion_enabled)
        logger.info(
            "Loaded %s (epoch=%s, fusion_enabled=%s)",
            path,
            checkpoint.meta.get("epoch"),
            self.model.config.fusion_enabled,
        )
        return self.model

    def _model(self) -> AVASRModel:
        if self.model is None:
            raise ConfigurationError(
                "No model; build one or load a checkpoint first", error_code="MODEL_MISSING"
            )
        return self.model

    # Training and decoding

    def train(
        self,
        train_records: Sequence[UtteranceRecord],
        dev_records: Sequence[UtteranceRecord],
        resume: bool = False,
    ) -> TrainResult:
        """Train a fresh model (or resume one) with early stopping on dev loss."""
        char_vocab, bpe = self._tokenizers()
        model = self.build_model()
        train_examples = self.load_examples(train_records)
        dev_examples = self.load_examples(dev_records)
        return train_loop(
            model,
            train_examples,
            dev_examples,
            self._config.train,
            self._config.data.batch_size_frames,
            char_vocab=char_vocab,
            bpe=bpe,
            resume=resume,
        )

    def decode(
        self, records: Sequence[UtteranceRecord], mode: str = "full", seed: int | None = None
    ) -> list[Decoded]:
        char_vocab, bpe = self._tokenizers()
        return decode_examples(
            self._model(),
            self.load_examples(records),
            char_vocab,
            bpe,
            self._config.decode,
            mode,
            self._config.train.seed if seed is None else seed,
        )

    def evaluate(
        self, records: Sequence[UtteranceRecord], mode: str = "full", seed: int | None = None
    ) -> EvalReport:
        char_vocab, bpe = self._tokenizers()
        return evaluate(
            self._model(),
            self.load_examples(records),
            char_vocab,
            bpe,
            self._config.decode,
            mode,
            self._config.train.seed if seed is None else seed,
        )

    def __repr__(self) -> str:
        return f"Pipeline(config={self._config!r}, model_loaded={self.model is not None})"
