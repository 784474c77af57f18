"""Command-line interface."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from avasr.config import Config
from avasr.data import generate_corpus, load_manifest, serialize_manifest
from avasr.decode import (
    EVAL_MODES,
    format_report_table,
    read_report_tsv,
    relative_improvement,
    write_report_tsv,
)
from avasr.exceptions import AVASRError
from avasr.experiments import FACTORS, run_ablation
from avasr.pipeline import STRATEGIES, Pipeline
from avasr.selfcheck import run_selfcheck


logger = logging.getLogger("avasr")

LOG_FORMAT = "%(asctime)s level=%(levelname)s logger=%(name)s %(message)s"


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="Run config file (TOML)")
    parser.add_argument("--config-env", default="default", help="Table inside config files")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any config key (repeatable)",
    )


def _add_decode_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("checkpoint", type=Path)
    parser.add_argument("manifest", type=Path)
    parser.add_argument("--mode", choices=list(EVAL_MODES), default="full")
    parser.add_argument("--no-fusion", action="store_true", help="Disable cross-modal fusion")
    parser.add_argument("--resolution", choices=["subword", "char"])
    parser.add_argument("--beam-size", type=int)
    parser.add_argument("--length-penalty", type=float)
    parser.add_argument("--length-penalty-kind", choices=["power", "gnmt"])
    parser.add_argument("--sigma", type=float, help="Std of gaussian replacement video")
    parser.add_argument("--seed", type=int, help="Seed of gaussian replacement video")
    parser.add_argument("--out", type=Path, required=True)
    _add_config_args(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avasr", description="Audio-visual speech recognition with multiresolution training"
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize-train", help="Learn the character and BPE vocabularies")
    p.add_argument("corpus", type=Path, help="Manifest, or plain text with --text")
    p.add_argument("--text", action="store_true", help="Corpus is one transcript per line")
    p.add_argument("--subword-size", type=int, help="Learned BPE symbols")
    p.add_argument("--out", type=Path, required=True)
    _add_config_args(p)

    p = sub.add_parser("prep", help="Filter, chunk or stack a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--strategy", choices=list(STRATEGIES), required=True)
    p.add_argument("--max-seconds", type=float)
    p.add_argument("--out", type=Path, required=True)
    _add_config_args(p)

    p = sub.add_parser("train", help="Train with early stopping on dev loss")
    p.add_argument("--train", type=Path, required=True, help="Training manifest")
    p.add_argument("--dev", type=Path, required=True, help="Dev manifest")
    p.add_argument("--tokenizers", type=Path, help="Directory from tokenize-train")
    p.add_argument("--out", type=Path, help="Checkpoint and metrics directory")
    p.add_argument("--gamma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--no-fusion", action="store_true")
    p.add_argument("--resume", action="store_true")
    _add_config_args(p)

    p = sub.add_parser("decode", help="Write id<TAB>hypothesis lines")
    _add_decode_args(p)

    p = sub.add_parser("eval", help="Decode and score a manifest")
    _add_decode_args(p)

    p = sub.add_parser("selfcheck", help="Run gradient and oracle suites")
    p.add_argument("--seeds", type=int, default=20)

    p = sub.add_parser("synth", help="Generate the synthetic toy corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--utterances", type=int, default=30)
    p.add_argument("--heldout", type=int, default=6)

    p = sub.add_parser("compare", help="Relative WER gain between two eval reports")
    p.add_argument("baseline", type=Path)
    p.add_argument("system", type=Path)

    p = sub.add_parser("ablate", help="Seeded comparison of one training factor")
    p.add_argument("--factor", choices=list(FACTORS), required=True)
    p.add_argument("--values", nargs="+", required=True)
    p.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--heldout", type=Path, required=True)
    p.add_argument("--dev", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _add_config_args(p)
    return parser


def _parse_overrides(items: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise argparse.ArgumentTypeError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _config(args: argparse.Namespace, **flags: Any) -> Config:
    overrides = _parse_overrides(args.overrides)
    overrides.update({k: v for k, v in flags.items() if v is not None})
    return Config(overrides, args.config, args.config_env)


def _tokenize_train(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.text:
        lines = args.corpus.read_text(encoding="utf-8").splitlines()
    else:
        lines = [r.transcript for r in load_manifest(args.corpus, check_files=False)]
    pipeline = Pipeline(config)
    pipeline.train_tokenizers(lines, args.subword_size)
    char_path, bpe_path = pipeline.save_tokenizers(args.out)
    config.write_resolved(args.out)
    logger.info("Wrote %s and %s", char_path, bpe_path)
    return 0


def _prep(args: argparse.Namespace) -> int:
    config = _config(args, max_seconds=args.max_seconds)
    pipeline = Pipeline(config)
    records = load_manifest(args.manifest, skip_invalid=config.data.skip_invalid)
    prepared = pipeline.prepare(records, args.strategy, args.out / "features")
    out_manifest = args.out / "manifest.tsv"
    serialize_manifest(prepared, out_manifest)
    config.write_resolved(args.out)
    logger.info("strategy=%s records=%d manifest=%s", args.strategy, len(prepared), out_manifest)
    return 0


def _train(args: argparse.Namespace) -> int:
    config = _config(
        args,
        gamma=args.gamma,
        seed=args.seed,
        max_epochs=args.max_epochs,
        max_steps=args.max_steps,
        checkpoint_dir=args.out,
        fusion_enabled=False if args.no_fusion else None,
    )
    pipeline = Pipeline(config)
    skip = config.data.skip_invalid
    train_records = load_manifest(args.train, skip_invalid=skip)
    dev_records = load_manifest(args.dev, skip_invalid=skip)
    out_dir = config.train.checkpoint_dir
    if args.tokenizers:
        pipeline.load_tokenizers(args.tokenizers)
    else:
        pipeline.train_tokenizers(r.transcript for r in train_records)
        pipeline.save_tokenizers(out_dir)
    config.write_resolved(out_dir)
    logger.info(
        "seed=%d shuffle_seed=%d out=%s",
        config.train.seed,
        config.train.effective_shuffle_seed,
        out_dir,
    )
    result = pipeline.train(train_records, dev_records, resume=args.resume)
    logger.info(
        "best_epoch=%d best_dev_loss=%.4f epochs=%d steps=%d best=%s",
        result.best_epoch,
        result.best_loss,
        result.epochs_run,
        result.steps,
        result.best_checkpoint,
    )
    return 0


def _decode_pipeline(args: argparse.Namespace) -> tuple[Pipeline, Config]:
    config = _config(
        args,
        resolution=args.resolution,
        beam_size=args.beam_size,
        length_penalty=args.length_penalty,
        length_penalty_kind=args.length_penalty_kind,
        missing_sigma=args.sigma,
        seed=args.seed,
    )
    pipeline = Pipeline(config)
    pipeline.load_checkpoint(args.checkpoint, fusion_enabled=False if args.no_fusion else None)
    logger.info("mode=%s seed=%d", args.mode, config.train.seed)
    return pipeline, config


def _decode(args: argparse.Namespace) -> int:
    pipeline, config = _decode_pipeline(args)
    records = load_manifest(args.manifest, skip_invalid=config.data.skip_invalid)
    decoded = pipeline.decode(records, args.mode)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("".join(f"{d.id}\t{d.hypothesis}\n" for d in decoded), encoding="utf-8")
    config.write_resolved(args.out.parent)
    truncated = sum(d.truncated for d in decoded)
    failed = [d.id for d in decoded if d.error]
    logger.info("decoded=%d truncated=%d failed=%d", len(decoded), truncated, len(failed))
    return 1 if failed else 0


def _eval(args: argparse.Namespace) -> int:
    pipeline, config = _decode_pipeline(args)
    records = load_manifest(args.manifest, skip_invalid=config.data.skip_invalid)
    report = pipeline.evaluate(records, args.mode)
    write_report_tsv(report, args.out)
    config.write_resolved(args.out.parent)
    print(format_report_table(report))
    if report.failed:
        logger.error("%d utterances failed to decode", len(report.failed))
        return 1
    return 0


def _selfcheck(args: argparse.Namespace) -> int:
    results = run_selfcheck(args.seeds)
    for r in results:
        print(f"{'ok' if r.passed else 'FAIL':<4}  {r.name:<18} {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def _synth(args: argparse.Namespace) -> int:
    corpus = generate_corpus(
        args.out, seed=args.seed, n_utterances=args.utterances, heldout=args.heldout
    )
    logger.info("seed=%d corpus=%s", args.seed, corpus.corpus)
    return 0


def _compare(args: argparse.Namespace) -> int:
    baseline = read_report_tsv(args.baseline)
    system = read_report_tsv(args.system)
    gain = relative_improvement(baseline.corpus_wer, system.corpus_wer)
    print(f"baseline {baseline.corpus_wer:.2%} ({args.baseline})")
    print(f"system   {system.corpus_wer:.2%} ({args.system})")
    print(f"relative improvement {gain:.2%}")
    return 0


def _ablate(args: argparse.Namespace) -> int:
    overrides = _parse_overrides(args.overrides)
    summaries = run_ablation(
        args.factor,
        args.values,
        args.seeds,
        load_manifest(args.train),
        load_manifest(args.heldout),
        args.out,
        dev_records=load_manifest(args.dev) if args.dev else None,
        overrides=overrides,
        config_file=args.config,
    )
    print(f"{'value':<10} {'epochs_to_best':>15} {'wer':>8}")
    for s in summaries:
        print(f"{s.value!s:<10} {s.median_epochs_to_best:>15g} {s.median_wer:>8.2%}")
    return 0


COMMANDS = {
    "tokenize-train": _tokenize_train,
    "prep": _prep,
    "train": _train,
    "decode": _decode,
    "eval": _eval,
    "selfcheck": _selfcheck,
    "synth": _synth,
    "compare": _compare,
    "ablate": _ablate,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and run one subcommand.

    Returns:
        0 on success, 1 on runtime failure, 2 on usage errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, force=True)
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as e:
        parser.print_usage(sys.stderr)
        print(f"avasr: error: {e}", file=sys.stderr)
        return 2
    except AVASRError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"avasr {args.command}: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
