"""Arithmetic backends shared by feedforward, backpropagation and update.

``FloatBackend`` is the ideal float64 reference. ``FixedBackend`` works on raw
int64 arrays in one network format with saturating arithmetic and table-based
activations; every saturation is counted.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from ..fixedpoint import ClipCounter, FixedFormat
from ..fixedpoint import vector as fx
from .activations import MAX_TABLE_BITS, ActivationId, activate_real, build_activation_table, quantized_activation


class BackendKind(str, Enum):
    FLOAT = "float"
    FIXED = "fixed"


class FloatBackend:
    kind = BackendKind.FLOAT
    fmt: Optional[FixedFormat] = None

    def __init__(self, activation: Union[str, ActivationId] = ActivationId.SIGMOID):
        self.activation = ActivationId.parse(activation)
        self.counter = ClipCounter()

    def from_real(self, x) -> np.ndarray:
        return np.array(x, dtype=np.float64)

    def to_real(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64)

    def zeros(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=np.float64)

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a * b

    def shift(self, a: np.ndarray, e: int) -> np.ndarray:
        return a * 2.0**-e

    def tree_sum(self, terms: np.ndarray) -> np.ndarray:
        return terms.sum(axis=-1)

    def sequential_sum(self, terms: np.ndarray) -> np.ndarray:
        return terms.sum(axis=-1)

    def activate(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return activate_real(self.activation, s)

    def describe(self) -> str:
        return "float64"


class FixedBackend:
    kind = BackendKind.FIXED

    def __init__(self, fmt: FixedFormat, activation: Union[str, ActivationId] = ActivationId.SIGMOID):
        self.fmt = fmt
        self.activation = ActivationId.parse(activation)
        self.counter = ClipCounter()
        self.table = build_activation_table(self.activation, fmt) if fmt.total_bits <= MAX_TABLE_BITS else None

    def from_real(self, x) -> np.ndarray:
        return fx.quantize_array(x, self.fmt)

    def to_real(self, v: np.ndarray) -> np.ndarray:
        return fx.to_real(v, self.fmt)

    def zeros(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=fx.RAW_DTYPE)

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return fx.add(a, b, self.fmt, self.counter)

    def sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return fx.sub(a, b, self.fmt, self.counter)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return fx.mul(a, b, self.fmt, self.counter)

    def shift(self, a: np.ndarray, e: int) -> np.ndarray:
        return fx.shift(a, e, self.fmt)

    def tree_sum(self, terms: np.ndarray) -> np.ndarray:
        return fx.tree_sum(terms, self.fmt, self.counter)

    def sequential_sum(self, terms: np.ndarray) -> np.ndarray:
        return fx.sequential_sum(terms, self.fmt, self.counter)

    def activate(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.table is not None:
            return self.table.lookup(s)
        return quantized_activation(self.activation, self.fmt, s)

    def describe(self) -> str:
        return str(self.fmt)


Backend = Union[FloatBackend, FixedBackend]


def make_backend(
    kind: Union[str, BackendKind],
    activation: Union[str, ActivationId] = ActivationId.SIGMOID,
    fmt: Optional[FixedFormat] = None,
) -> Backend:
    kind = BackendKind(kind)
    if kind is BackendKind.FLOAT:
        return FloatBackend(activation)
    if fmt is None:
        fmt = FixedFormat(12, 3, 8)
    return FixedBackend(fmt, activation)
