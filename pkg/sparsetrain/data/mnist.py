"""MNIST ingestion and encoding in the layout the training harness consumes.

Images are 8-bit grayscale; each is scaled by 1/256, quantized and zero-padded to
the input layer width (1024). Labels become one-hot vectors zero-padded to the
output layer width (32).
"""

from __future__ import annotations

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np

from ..common.errors import ConfigError, IdxFormatError
from ..fixedpoint import FixedFormat
from ..fixedpoint.vector import quantize_array

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
DEFAULT_EPOCH_SIZE = 12544
PIXEL_SCALE = 256.0
NUM_CLASSES = 10


@dataclass(frozen=True, eq=False)
class Dataset:
    """Flattened images (samples x pixels, uint8) and labels (uint8)."""

    images: np.ndarray
    labels: np.ndarray
    rows: int = 28
    cols: int = 28

    def __post_init__(self) -> None:
        if len(self.images) != len(self.labels):
            raise IdxFormatError(
                f"count mismatch: {len(self.images)} images vs {len(self.labels)} labels"
            )
        if self.images.ndim != 2 or self.images.shape[1] != self.rows * self.cols:
            raise IdxFormatError(f"images must be (n, {self.rows * self.cols}), got {self.images.shape}")
        if len(self.labels) and int(self.labels.max()) >= NUM_CLASSES:
            raise IdxFormatError(f"label {int(self.labels.max())} outside [0, {NUM_CLASSES - 1}]")

    def __len__(self) -> int:
        return len(self.labels)

    def sample(self, index: int) -> Tuple[np.ndarray, int]:
        return self.images[index], int(self.labels[index])


@dataclass(frozen=True, eq=False)
class EncodedSample:
    a0: np.ndarray
    y: np.ndarray
    a0_raw: Optional[np.ndarray] = None


def _read_bytes(path: Path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _parse_idx(path: Path, expected_magic: int) -> Tuple[Tuple[int, ...], np.ndarray]:
    data = _read_bytes(path)
    if len(data) < 4:
        raise IdxFormatError(f"truncated IDX file: {path}")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise IdxFormatError(
            f"not an IDX file of the expected kind: {path} has magic 0x{magic:08x}, "
            f"expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxFormatError(f"truncated IDX file: {path} header")
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    size = int(np.prod(dims, dtype=np.int64))
    if len(data) - header < size:
        raise IdxFormatError(
            f"truncated IDX file: {path} holds {len(data) - header} of {size} payload bytes"
        )
    payload = np.frombuffer(data, dtype=np.uint8, count=size, offset=header)
    return dims, payload


def load_idx(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """Parse an IDX image/label pair (optionally gzip-compressed)."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    image_dims, pixels = _parse_idx(images_path, IDX_IMAGES_MAGIC)
    label_dims, labels = _parse_idx(labels_path, IDX_LABELS_MAGIC)
    count, rows, cols = image_dims
    if count != label_dims[0]:
        raise IdxFormatError(f"count mismatch: {count} images vs {label_dims[0]} labels")
    logger.info(f"Loaded {count} samples of {rows}x{cols} from {images_path.name}")
    return Dataset(pixels.reshape(count, rows * cols).copy(), labels.copy(), rows, cols)


def save_idx(path: str | Path, array: np.ndarray) -> Path:
    """Write a uint8 array as IDX (3-D images or 1-D labels)."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(">" + "I" * array.ndim, *array.shape))
        fh.write(array.tobytes())
    return path


def encode(
    image: np.ndarray,
    label: int,
    fmt: Optional[FixedFormat] = None,
    n_inputs: int = 1024,
    n_outputs: int = 32,
) -> EncodedSample:
    if len(image) > n_inputs or not 0 <= label < n_outputs:
        raise IdxFormatError(f"sample does not fit {n_inputs} inputs / {n_outputs} outputs")
    a0 = np.zeros(n_inputs, dtype=np.float64)
    a0[:len(image)] = np.asarray(image, dtype=np.float64) / PIXEL_SCALE
    raw = None
    if fmt is not None:
        raw = quantize_array(a0, fmt)
        a0 = raw * fmt.lsb
    y = np.zeros(n_outputs, dtype=np.int64)
    y[label] = 1
    return EncodedSample(a0, y, raw)


def encode_dataset(
    dataset: Dataset,
    count: int,
    fmt: Optional[FixedFormat] = None,
    n_inputs: int = 1024,
    n_outputs: int = 32,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inputs (count x n_inputs), one-hot targets and labels.

    Without ``fmt`` the inputs are pixel/256 as float32, which is exact for 8-bit
    pixels; the training backend quantizes them per sample. With ``fmt`` they are
    quantized here and returned as real float64 values, row-for-row identical to
    :func:`encode`.
    """
    if count > len(dataset):
        raise ConfigError("training.epoch_size", f"{count} exceeds the {len(dataset)} available samples")
    pixels = dataset.images[:count]
    if pixels.shape[1] > n_inputs:
        raise IdxFormatError(f"{pixels.shape[1]} pixels do not fit {n_inputs} inputs")
    inputs = np.zeros((count, n_inputs), dtype=np.float32)
    inputs[:, :pixels.shape[1]] = pixels.astype(np.float32) / np.float32(PIXEL_SCALE)
    if fmt is not None:
        inputs = quantize_array(inputs, fmt) * fmt.lsb
    labels = dataset.labels[:count].astype(np.int64)
    targets = np.zeros((count, n_outputs), dtype=np.float32)
    targets[np.arange(count), labels] = 1.0
    return inputs, targets, labels


def epoch_stream(dataset: Dataset, epoch_size: int = DEFAULT_EPOCH_SIZE) -> Iterator[Tuple[int, np.ndarray, int]]:
    """The first ``epoch_size`` samples in natural order, identical every epoch."""
    if epoch_size > len(dataset):
        raise ConfigError("training.epoch_size", f"{epoch_size} exceeds the {len(dataset)} available samples")
    for index in range(epoch_size):
        image, label = dataset.sample(index)
        yield index, image, label


def synthetic_dataset(count: int, seed: int = 0, rows: int = 28, cols: int = 28) -> Dataset:
    """Deterministic digit-like data: one noisy binary prototype per class."""
    rng = np.random.default_rng(seed)
    prototypes = (rng.random((NUM_CLASSES, rows * cols)) < 0.25).astype(np.uint8) * 255
    labels = rng.integers(0, NUM_CLASSES, size=count).astype(np.uint8)
    noise = rng.random((count, rows * cols)) < 0.05
    images = np.where(noise, 255 - prototypes[labels], prototypes[labels]).astype(np.uint8)
    return Dataset(images, labels, rows, cols)
