"""Single-file checkpoints.

Layout::

    version (u8) | header length (u32 LE) | JSON header | tensor payloads

The JSON header holds the model config echo, the training config, run
metadata (seed, step, epoch, best loss, generator state), the serialized
tokenizers and a table of tensors (name, dtype, shape, offset). Payloads are
little-endian and stored back to back in table order. Parameters use their
module path as name; optimizer moments are stored as ``opt.m.<name>`` and
``opt.v.<name>``.
"""

from __future__ import annotations

import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from avasr.exceptions import VersionError
from avasr.models import AVASRConfig, TrainConfig
from avasr.network.avasr import AVASRModel
from avasr.tensor import get_default_dtype
from avasr.tokenizer import BpeModel, CharVocab


logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")

# Flags that may differ between training and inference without touching weights.
RUNTIME_FIELDS = frozenset({"fusion_enabled", "dropout"})


@dataclass
class Checkpoint:
    config: AVASRConfig
    params: dict[str, np.ndarray]
    optimizer: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)
    train_config: TrainConfig | None = None
    char_vocab: CharVocab | None = None
    bpe: BpeModel | None = None


def save_checkpoint(
    path: Path,
    model: AVASRModel,
    optimizer_state: dict[str, np.ndarray] | None = None,
    meta: dict[str, Any] | None = None,
    train_config: TrainConfig | None = None,
    char_vocab: CharVocab | None = None,
    bpe: BpeModel | None = None,
) -> None:
    """Atomically write ``model`` and training state to ``path``."""
    tensors: list[tuple[str, np.ndarray]] = [
        (name, p.data) for name, p in model.named_parameters()
    ]
    tensors += [(f"opt.{name}", arr) for name, arr in (optimizer_state or {}).items()]

    table = []
    offset = 0
    payloads = []
    for name, arr in tensors:
        data = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
        table.append(
            {"name": name, "dtype": data.dtype.str, "shape": list(data.shape), "offset": offset}
        )
        payloads.append(data.tobytes())
        offset += data.nbytes

    header = {
        "config": model.config.model_dump(mode="json"),
        "train_config": train_config.model_dump(mode="json") if train_config else None,
        "meta": {**(meta or {}), "rng_state": model.rng.bit_generator.state},
        "tokenizers": {
            "char": char_vocab.dumps() if char_vocab else None,
            "bpe": bpe.dumps() if bpe else None,
        },
        "tensors": table,
    }
    encoded = json.dumps(header).encode("utf-8")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(bytes([FORMAT_VERSION]))
            f.write(_LENGTH.pack(len(encoded)))
            f.write(encoded)
            for payload in payloads:
                f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug("Saved checkpoint %s (%d tensors)", path, len(table))


def load_checkpoint(path: Path, expected: AVASRConfig | None = None) -> Checkpoint:
    """Read a checkpoint.

    Args:
        path: Checkpoint file
        expected: Model config the caller intends to use; architecture fields
            must match the stored config

    Raises:
        VersionError: On an unknown format version, a corrupt header, a
            config mismatch or tokenizers that disagree with the config.
    """
    raw = Path(path).read_bytes()
    if not raw or raw[0] != FORMAT_VERSION:
        raise VersionError(
            f"Unsupported checkpoint format in {path}",
            error_code="UNSUPPORTED_FORMAT",
            details={"found": raw[0] if raw else None, "expected": FORMAT_VERSION},
        )
    try:
        (length,) = _LENGTH.unpack_from(raw, 1)
        start = 1 + _LENGTH.size
        header = json.loads(raw[start : start + length].decode("utf-8"))
        config = AVASRConfig.model_validate(header["config"])
    except (struct.error, ValueError, KeyError) as e:
        raise VersionError(
            f"Corrupt checkpoint header in {path}: {e}", error_code="CORRUPT_HEADER"
        ) from e

    if expected is not None:
        check_config(config, expected)

    base = start + length
    params: dict[str, np.ndarray] = {}
    optimizer: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=base + entry["offset"])
        arr = arr.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
        name = entry["name"]
        if name.startswith("opt."):
            optimizer[name[len("opt.") :]] = arr
        else:
            params[name] = arr

    tokenizers = header.get("tokenizers") or {}
    char_vocab = CharVocab.loads(tokenizers["char"]) if tokenizers.get("char") else None
    bpe = BpeModel.loads(tokenizers["bpe"]) if tokenizers.get("bpe") else None
    _check_tokenizers(config, char_vocab, bpe)

    train_config = header.get("train_config")
    return Checkpoint(
        config=config,
        params=params,
        optimizer=optimizer,
        meta=header.get("meta", {}),
        train_config=TrainConfig.model_validate(train_config) if train_config else None,
        char_vocab=char_vocab,
        bpe=bpe,
    )


def check_config(stored: AVASRConfig, expected: AVASRConfig) -> None:
    stored_fields = stored.model_dump()
    expected_fields = expected.model_dump()
    diff = {
        key: {"checkpoint": stored_fields[key], "requested": expected_fields[key]}
        for key in stored_fields
        if key not in RUNTIME_FIELDS and stored_fields[key] != expected_fields[key]
    }
    if diff:
        raise VersionError(
            f"Checkpoint config differs in {sorted(diff)}",
            error_code="CONFIG_MISMATCH",
            details=diff,
        )


def _check_tokenizers(
    config: AVASRConfig, char_vocab: CharVocab | None, bpe: BpeModel | None
) -> None:
    if char_vocab is not None and len(char_vocab) != config.char_vocab_size:
        raise VersionError(
            f"Character vocabulary has {len(char_vocab)} symbols, model expects "
            f"{config.char_vocab_size}",
            error_code="TOKENIZER_MISMATCH",
        )
    if bpe is not None and len(bpe) != config.subword_vocab_size:
        raise VersionError(
            f"Subword model has {len(bpe)} symbols, model expects {config.subword_vocab_size}",
            error_code="TOKENIZER_MISMATCH",
        )


def load_parameters(model: AVASRModel, params: dict[str, np.ndarray]) -> None:
    """Copy ``params`` into ``model``; names and shapes must match exactly."""
    named = dict(model.named_parameters())
    missing = sorted(set(named) - set(params))
    unexpected = sorted(set(params) - set(named))
    if missing or unexpected:
        raise VersionError(
            "Checkpoint parameters do not match the model",
            error_code="PARAMETER_MISMATCH",
            details={"missing": missing, "unexpected": unexpected},
        )
    for name, param in named.items():
        if params[name].shape != param.data.shape:
            raise VersionError(
                f"Parameter {name} has shape {params[name].shape}, model expects "
                f"{param.data.shape}",
                error_code="PARAMETER_MISMATCH",
            )
        param.data = params[name].astype(get_default_dtype())


def restore_model(checkpoint: Checkpoint, fusion_enabled: bool | None = None) -> AVASRModel:
    """Rebuild the model stored in ``checkpoint``.

    Args:
        checkpoint: Loaded checkpoint
        fusion_enabled: Override the stored fusion flag (weights unchanged)
    """
    config = checkpoint.config
    if fusion_enabled is not None:
        config = config.model_copy(update={"fusion_enabled": fusion_enabled})
    model = AVASRModel(config, seed=int(checkpoint.meta.get("seed", 0)))
    load_parameters(model, checkpoint.params)
    if "rng_state" in checkpoint.meta:
        model.rng.bit_generator.state = checkpoint.meta["rng_state"]
    return model
