"""Seeded ablations over training factors."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from avasr.config import Config
from avasr.exceptions import ConfigurationError
from avasr.models import UtteranceRecord
from avasr.pipeline import STRATEGIES, Pipeline


logger = logging.getLogger(__name__)

FACTORS = ("gamma", "fusion", "strategy")
ABLATION_FILE = "ablation.tsv"
_TRUE = {"1", "true", "on", "yes"}
_FALSE = {"0", "false", "off", "no"}


@dataclass(frozen=True)
class AblationRun:
    value: Any
    seed: int
    epochs_to_best: int
    wer: float


@dataclass
class AblationSummary:
    factor: str
    value: Any
    runs: list[AblationRun] = field(default_factory=list)

    @property
    def median_epochs_to_best(self) -> float:
        return float(np.median([r.epochs_to_best for r in self.runs]))

    @property
    def median_wer(self) -> float:
        return float(np.median([r.wer for r in self.runs]))


def parse_value(factor: str, raw: Any) -> Any:
    """Coerce a command-line value for ``factor``.

    Examples:
        >>> parse_value("gamma", "0.5")
        0.5
        >>> parse_value("fusion", "off")
        False
    """
    if factor == "gamma":
        return float(raw)
    if factor == "fusion":
        if isinstance(raw, bool):
            return raw
        text = str(raw).lower()
        if text in _TRUE | _FALSE:
            return text in _TRUE
    elif factor == "strategy":
        if raw in STRATEGIES:
            return raw
    else:
        raise ConfigurationError(
            f"Unknown ablation factor: {factor}",
            error_code="INVALID_FACTOR",
            details={"factor": factor, "allowed": list(FACTORS)},
        )
    raise ConfigurationError(
        f"Invalid value for {factor}: {raw!r}",
        error_code="INVALID_FACTOR_VALUE",
        details={"factor": factor, "value": raw},
    )


def _overrides(factor: str, value: Any) -> dict[str, Any]:
    if factor == "gamma":
        return {"gamma": value}
    if factor == "fusion":
        return {"fusion_enabled": value}
    return {}


def run_ablation(
    factor: str,
    values: Sequence[Any],
    seeds: Sequence[int],
    train_records: Sequence[UtteranceRecord],
    heldout_records: Sequence[UtteranceRecord],
    out_dir: Path,
    dev_records: Sequence[UtteranceRecord] | None = None,
    overrides: dict[str, Any] | None = None,
    config_file: Path | None = None,
) -> list[AblationSummary]:
    """Train one model per (value, seed) and score it on held-out data.

    Every run lives in ``out_dir/<factor>=<value>/seed<seed>`` with its own
    resolved config, checkpoints and metrics. The best checkpoint is
    decoded on ``heldout_records`` with the full audio-visual input.

    Args:
        factor: ``gamma``, ``fusion`` or ``strategy``
        values: Settings of the factor to compare
        seeds: Training seeds; medians are taken over them
        train_records: Training manifest records
        heldout_records: Scored records
        out_dir: Root of all run directories
        dev_records: Early-stopping records (defaults to ``heldout_records``)
        overrides: Settings shared by every run
        config_file: Shared run config file

    Returns:
        One summary per value, in the order given
    """
    if not values or not seeds:
        raise ConfigurationError(
            "An ablation needs at least one value and one seed", error_code="EMPTY_ABLATION"
        )
    out_dir = Path(out_dir)
    dev = heldout_records if dev_records is None else dev_records
    summaries = []
    for raw in values:
        value = parse_value(factor, raw)
        summary = AblationSummary(factor, value)
        for seed in seeds:
            run_dir = out_dir / f"{factor}={value}" / f"seed{seed}"
            config = Config(
                {
                    **(overrides or {}),
                    **_overrides(factor, value),
                    "seed": seed,
                    "checkpoint_dir": run_dir,
                },
                config_file=config_file,
            )
            config.write_resolved(run_dir)
            pipeline = Pipeline(config)
            pipeline.train_tokenizers(r.transcript for r in train_records)

            train, dev_set, heldout = train_records, dev, heldout_records
            if factor == "strategy":
                prepared = run_dir / "features"
                train = pipeline.prepare(train, value, prepared)
                dev_set = pipeline.prepare(dev_set, value, prepared)
                heldout = pipeline.prepare(heldout, value, prepared)

            result = pipeline.train(train, dev_set)
            pipeline.load_checkpoint(result.best_checkpoint)
            report = pipeline.evaluate(heldout, mode="full", seed=seed)
            run = AblationRun(value, seed, result.epochs_to_best, report.corpus_wer)
            summary.runs.append(run)
            logger.info(
                "ablation factor=%s value=%s seed=%d epochs_to_best=%d wer=%.4f",
                factor,
                value,
                seed,
                run.epochs_to_best,
                run.wer,
            )
        summaries.append(summary)

    write_summary(summaries, out_dir / ABLATION_FILE)
    return summaries


def write_summary(summaries: Sequence[AblationSummary], path: Path) -> None:
    lines = ["factor\tvalue\tseeds\tmedian_epochs_to_best\tmedian_wer"]
    for s in summaries:
        lines.append(
            f"{s.factor}\t{s.value}\t{len(s.runs)}\t{s.median_epochs_to_best:g}\t{s.median_wer:.6f}"
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
