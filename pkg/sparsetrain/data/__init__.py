"""MNIST ingestion, padding, encoding and epoch streaming."""

from .mnist import (
    DEFAULT_EPOCH_SIZE,
    Dataset,
    EncodedSample,
    encode,
    encode_dataset,
    epoch_stream,
    load_idx,
    save_idx,
    synthetic_dataset,
)

__all__ = [
    "DEFAULT_EPOCH_SIZE",
    "Dataset",
    "EncodedSample",
    "load_idx",
    "save_idx",
    "encode",
    "encode_dataset",
    "epoch_stream",
    "synthetic_dataset",
]
