"""Activation functions and their hardware lookup tables.

In hardware mode the activation and its derivative are read from tables
indexed by the raw two's-complement bit pattern of the pre-activation, so a
12-bit format needs 4096 entries per table. Values are kept at the format's
fractional precision; derivatives at no more than 6 fractional bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
import pandas as pd

from ..common.errors import EngineError
from ..fixedpoint import FixedFormat, Rounding
from ..fixedpoint.vector import RAW_DTYPE, quantize_array

DERIVATIVE_FRACTION_BITS = 6
MAX_TABLE_BITS = 20


class ActivationId(str, Enum):
    SIGMOID = "sigmoid"
    RELU_CLIP1 = "relu_clip1"
    RELU_CLIP8 = "relu_clip8"

    @classmethod
    def parse(cls, value: Union[str, "ActivationId"]) -> "ActivationId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise EngineError(f"unknown activation '{value}'") from None

    @property
    def ceiling(self) -> float:
        """Upper clip of the clipped ReLUs; 1 for the sigmoid."""
        return {ActivationId.SIGMOID: 1.0, ActivationId.RELU_CLIP1: 1.0, ActivationId.RELU_CLIP8: 8.0}[self]


def activate_real(activation: ActivationId, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact activation and derivative in float64."""
    s = np.asarray(s, dtype=np.float64)
    if activation is ActivationId.SIGMOID:
        a = 0.5 * (1.0 + np.tanh(0.5 * s))
        return a, a * (1.0 - a)
    ceiling = activation.ceiling
    a = np.clip(s, 0.0, ceiling)
    return a, ((s > 0.0) & (s < ceiling)).astype(np.float64)


def signed_inputs(fmt: FixedFormat) -> np.ndarray:
    """Raw pre-activation for every table index (index is the two's-complement pattern)."""
    index = np.arange(1 << fmt.total_bits, dtype=RAW_DTYPE)
    return np.where(index > fmt.raw_max, index - (1 << fmt.total_bits), index)


@dataclass(frozen=True, eq=False)
class ActivationTable:
    activation: ActivationId
    fmt: FixedFormat
    values: np.ndarray
    derivatives: np.ndarray
    derivative_bits: int

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def mask(self) -> int:
        return self.size - 1

    def lookup(self, raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        index = np.asarray(raw, dtype=RAW_DTYPE) & self.mask
        return self.values[index], self.derivatives[index]

    def input_raw(self) -> np.ndarray:
        return signed_inputs(self.fmt)

    def to_frame(self) -> pd.DataFrame:
        inputs = self.input_raw()
        return pd.DataFrame(
            {
                "index": np.arange(self.size),
                "input_raw": inputs,
                "input": inputs * self.fmt.lsb,
                "value_raw": self.values,
                "value": self.values * self.fmt.lsb,
                "derivative_raw": self.derivatives,
                "derivative": self.derivatives * self.fmt.lsb,
            }
        )


def quantized_activation(activation: ActivationId, fmt: FixedFormat, raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Table entries for the given raw pre-activations, computed directly.

    Tables are filled offline, so both outputs round to nearest rather than
    following the datapath rounding mode.
    """
    nearest = fmt.with_rounding(Rounding.NEAREST_EVEN)
    a, da = activate_real(activation, np.asarray(raw) * fmt.lsb)
    derivative_bits = min(DERIVATIVE_FRACTION_BITS, fmt.fraction_bits)
    da = np.rint(da * 2.0**derivative_bits) / 2.0**derivative_bits
    return quantize_array(a, nearest), quantize_array(da, nearest)


def build_activation_table(activation: Union[str, ActivationId], fmt: FixedFormat) -> ActivationTable:
    activation = ActivationId.parse(activation)
    if fmt.total_bits > MAX_TABLE_BITS:
        raise EngineError(f"a {fmt.total_bits}-bit table exceeds {MAX_TABLE_BITS} address bits")
    values, derivatives = quantized_activation(activation, fmt, signed_inputs(fmt))
    values.setflags(write=False)
    derivatives.setflags(write=False)
    return ActivationTable(
        activation, fmt, values, derivatives, min(DERIVATIVE_FRACTION_BITS, fmt.fraction_bits)
    )
