"""Manifests, feature files, preprocessing and batching."""

from avasr.data.batching import (
    Batch,
    Example,
    batch_examples,
    collate,
    load_example,
    load_examples,
    make_batches,
    plan_batches,
)
from avasr.data.features import read_features, write_features
from avasr.data.manifest import (
    format_record,
    load_manifest,
    serialize_manifest,
    validate_spans,
)
from avasr.data.preprocess import (
    chunk_records,
    filter_long,
    retained_fraction,
    stack_frames,
    stack_records,
    unstack_frames,
)
from avasr.data.synth import SynthCorpus, generate_corpus

__all__ = [
    # Records and files
    "load_manifest",
    "serialize_manifest",
    "format_record",
    "validate_spans",
    "read_features",
    "write_features",
    # Preprocessing
    "filter_long",
    "retained_fraction",
    "chunk_records",
    "stack_frames",
    "unstack_frames",
    "stack_records",
    # Batching
    "Batch",
    "Example",
    "load_example",
    "load_examples",
    "plan_batches",
    "collate",
    "batch_examples",
    "make_batches",
    # Synthetic corpus
    "SynthCorpus",
    "generate_corpus",
]
