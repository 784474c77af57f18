"""Epoch loop with dev-loss early stopping, checkpoints and a metrics log."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from avasr.data import Example, batch_examples
from avasr.exceptions import ConfigurationError
from avasr.models import TrainConfig
from avasr.network import AVASRModel, load_checkpoint, load_parameters, save_checkpoint
from avasr.tensor import backward, no_grad
from avasr.tokenizer import BpeModel, CharVocab
from avasr.train.losses import batch_loss
from avasr.train.optim import Adam, clip_grad_norm, lr_schedule


logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.tsv"
TIMING_FILE = "timing.tsv"
BEST_CHECKPOINT = "best.ckpt"
LAST_CHECKPOINT = "last.ckpt"
METRICS_HEADER = (
    "epoch",
    "step",
    "train_loss",
    "dev_loss",
    "dev_char_loss",
    "dev_subword_loss",
    "lr",
    "best_epoch",
    "skipped_steps",
)


@dataclass(frozen=True)
class DevLoss:
    total: float
    char: float
    subword: float


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    step: int
    train_loss: float
    dev_loss: float
    dev_char_loss: float
    dev_subword_loss: float
    lr: float
    best_epoch: int
    skipped_steps: int

    def to_row(self) -> str:
        return "\t".join(
            [
                str(self.epoch),
                str(self.step),
                f"{self.train_loss:.6f}",
                f"{self.dev_loss:.6f}",
                f"{self.dev_char_loss:.6f}",
                f"{self.dev_subword_loss:.6f}",
                f"{self.lr:.6e}",
                str(self.best_epoch),
                str(self.skipped_steps),
            ]
        )


@dataclass
class TrainResult:
    best_checkpoint: Path
    last_checkpoint: Path
    metrics_path: Path
    best_epoch: int
    best_loss: float
    epochs_run: int
    steps: int
    history: list[EpochMetrics] = field(default_factory=list)

    @property
    def epochs_to_best(self) -> int:
        return self.best_epoch


def evaluate_loss(
    model: AVASRModel,
    examples: Sequence[Example],
    gamma: float,
    smoothing: float,
    batch_size_frames: int,
) -> DevLoss:
    """Token-weighted dev losses with dropout off and no graph."""
    was_training = model.training
    model.eval()
    sums = {"char": 0.0, "subword": 0.0}
    counts = {"char": 0, "subword": 0}
    try:
        with no_grad():
            for batch in batch_examples(examples, batch_size_frames, shuffle_seed=0):
                loss = batch_loss(model, batch, gamma, smoothing)
                for resolution, value in (("char", loss.char), ("subword", loss.subword)):
                    tokens = int(batch.teacher_forcing(resolution)[2].sum())
                    sums[resolution] += value.item() * tokens
                    counts[resolution] += tokens
    finally:
        model.train(was_training)
    char = sums["char"] / counts["char"]
    subword = sums["subword"] / counts["subword"]
    return DevLoss(gamma * subword + (1.0 - gamma) * char, char, subword)


def _read_history(path: Path, upto_epoch: int) -> list[str]:
    if not path.exists():
        return []
    lines = path.read_text(encoding="utf-8").splitlines()[1:]
    return [line for line in lines if line and int(line.split("\t", 1)[0]) <= upto_epoch]


def train_loop(
    model: AVASRModel,
    train_examples: Sequence[Example],
    dev_examples: Sequence[Example],
    config: TrainConfig,
    batch_size_frames: int,
    char_vocab: CharVocab | None = None,
    bpe: BpeModel | None = None,
    resume: bool = False,
) -> TrainResult:
    """Train until patience runs out, ``max_epochs`` or ``max_steps``.

    Each epoch ends with a dev evaluation. The lowest gamma-weighted dev loss
    so far is saved to ``best.ckpt``; every epoch is saved to ``last.ckpt``
    for resumption. One metrics row per epoch goes to ``metrics.tsv``; wall
    times go to ``timing.tsv`` so the metrics stay reproducible.

    Args:
        model: Model to optimize in place
        train_examples: Loaded training utterances
        dev_examples: Loaded dev utterances (the training set when empty)
        config: Optimization settings; ``checkpoint_dir`` receives all outputs
        batch_size_frames: Padded-frame budget per batch
        char_vocab: Embedded into checkpoints when given
        bpe: Embedded into checkpoints when given
        resume: Continue from ``last.ckpt`` if it exists

    Returns:
        Paths and summary of the run
    """
    if not train_examples:
        raise ConfigurationError("No training utterances", error_code="EMPTY_TRAIN_SET")
    if not dev_examples:
        logger.warning("No dev utterances; early stopping on the training set")
        dev_examples = train_examples

    out_dir = Path(config.checkpoint_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    best_path = out_dir / BEST_CHECKPOINT
    last_path = out_dir / LAST_CHECKPOINT
    metrics_path = out_dir / METRICS_FILE
    timing_path = out_dir / TIMING_FILE

    optimizer = Adam(
        list(model.named_parameters()), config.adam_beta1, config.adam_beta2, config.adam_eps
    )
    epoch = step = best_epoch = bad_epochs = 0
    best_loss = math.inf
    history_rows: list[str] = []
    timing_rows: list[str] = []

    if resume and last_path.exists():
        checkpoint = load_checkpoint(last_path, expected=model.config)
        load_parameters(model, checkpoint.params)
        meta = checkpoint.meta
        model.rng.bit_generator.state = meta["rng_state"]
        optimizer.load_state_dict(
            checkpoint.optimizer, int(meta["optimizer_steps"]), int(meta["skipped_steps"])
        )
        epoch, step = int(meta["epoch"]), int(meta["step"])
        best_epoch, bad_epochs = int(meta["best_epoch"]), int(meta["bad_epochs"])
        best_loss = float(meta["best_loss"])
        history_rows = _read_history(metrics_path, epoch)
        timing_rows = _read_history(timing_path, epoch)
        logger.info("Resumed from %s at epoch=%d step=%d", last_path, epoch, step)

    logger.info(
        "Training seed=%d shuffle_seed=%d gamma=%s label_smoothing=%s params=%d",
        config.seed,
        config.effective_shuffle_seed,
        config.gamma,
        config.label_smoothing,
        model.num_parameters(),
    )

    history: list[EpochMetrics] = []
    stop = bad_epochs >= config.patience or (
        config.max_steps is not None and step >= config.max_steps
    )
    lr = lr_schedule(max(step, 1), config.base_lr, config.warmup_steps, config.schedule)
    while not stop and epoch < config.max_epochs:
        epoch += 1
        started = time.perf_counter()
        model.train()
        train_total = 0.0
        batches = 0
        for batch in batch_examples(
            train_examples, batch_size_frames, config.effective_shuffle_seed + epoch
        ):
            step += 1
            lr = lr_schedule(step, config.base_lr, config.warmup_steps, config.schedule)
            optimizer.zero_grad()
            loss = batch_loss(model, batch, config.gamma, config.label_smoothing)
            backward(loss.total)
            if config.clip_norm is not None:
                clip_grad_norm(model.parameters(), config.clip_norm)
            optimizer.step(lr)
            train_total += loss.total.item()
            batches += 1
            if config.max_steps is not None and step >= config.max_steps:
                stop = True
                break

        dev = evaluate_loss(
            model, dev_examples, config.gamma, config.label_smoothing, batch_size_frames
        )
        if dev.total < best_loss:
            best_loss, best_epoch, bad_epochs = dev.total, epoch, 0
        else:
            bad_epochs += 1

        metrics = EpochMetrics(
            epoch=epoch,
            step=step,
            train_loss=train_total / max(batches, 1),
            dev_loss=dev.total,
            dev_char_loss=dev.char,
            dev_subword_loss=dev.subword,
            lr=lr,
            best_epoch=best_epoch,
            skipped_steps=optimizer.skipped,
        )
        history.append(metrics)
        history_rows.append(metrics.to_row())
        elapsed = time.perf_counter() - started
        timing_rows.append(f"{epoch}\t{elapsed:.3f}")
        metrics_path.write_text(
            "\t".join(METRICS_HEADER) + "\n" + "".join(r + "\n" for r in history_rows),
            encoding="utf-8",
        )
        timing_path.write_text(
            "epoch\twall_s\n" + "".join(r + "\n" for r in timing_rows), encoding="utf-8"
        )

        meta = {
            "seed": config.seed,
            "epoch": epoch,
            "step": step,
            "best_epoch": best_epoch,
            "best_loss": best_loss,
            "bad_epochs": bad_epochs,
            "optimizer_steps": optimizer.steps,
            "skipped_steps": optimizer.skipped,
        }
        if best_epoch == epoch:
            save_checkpoint(best_path, model, None, meta, config, char_vocab, bpe)
        save_checkpoint(last_path, model, optimizer.state_dict(), meta, config, char_vocab, bpe)

        logger.info(
            "epoch=%d step=%d train_loss=%.4f dev_loss=%.4f dev_char=%.4f dev_subword=%.4f "
            "lr=%.3e best_epoch=%d wall_s=%.1f",
            epoch,
            step,
            metrics.train_loss,
            dev.total,
            dev.char,
            dev.subword,
            lr,
            best_epoch,
            elapsed,
        )
        if bad_epochs >= config.patience:
            logger.info("Early stop: no dev improvement for %d epochs", bad_epochs)
            stop = True

    return TrainResult(
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        metrics_path=metrics_path,
        best_epoch=best_epoch,
        best_loss=best_loss,
        epochs_run=epoch,
        steps=step,
        history=history,
    )
