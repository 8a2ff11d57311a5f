"""Vectorized fixed-point arithmetic on raw int64 arrays.

Each function is the elementwise counterpart of the scalar operation in
``format.py`` and produces bit-identical results. Raw arrays carry no format;
the caller passes it explicitly.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..common.errors import FixedPointError
from .format import FixedFormat, Rounding

RAW_DTYPE = np.int64


class ClipCounter:
    """Counts how many results saturated."""

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)

    def reset(self) -> int:
        n, self.count = self.count, 0
        return n


def saturate(raw: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    if counter is not None:
        counter.add(np.count_nonzero((raw > fmt.raw_max) | (raw < fmt.raw_min)))
    return np.clip(raw, fmt.raw_min, fmt.raw_max)


def requantize_array(raw: np.ndarray, shift: int, rounding: Rounding) -> np.ndarray:
    if shift < 0:
        raise FixedPointError(f"negative shift {shift}")
    if shift == 0:
        return raw
    q = raw >> shift
    if rounding is Rounding.TRUNCATE:
        return q
    rem = raw - (q << shift)
    half = 1 << (shift - 1)
    bump = (rem > half) | ((rem == half) & ((q & 1) == 1))
    return q + bump.astype(RAW_DTYPE)


def quantize_array(x: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise FixedPointError("non-finite operand")
    scaled = np.clip(x, fmt.min_value - 1.0, fmt.max_value + 1.0) * fmt.scale
    if fmt.rounding is Rounding.TRUNCATE:
        raw = np.floor(scaled)
    else:
        raw = np.rint(scaled)  # half to even
    return saturate(raw.astype(RAW_DTYPE), fmt, counter)


def to_real(raw: np.ndarray, fmt: FixedFormat) -> np.ndarray:
    return np.asarray(raw, dtype=np.float64) * fmt.lsb


def add(a: np.ndarray, b: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    return saturate(a + b, fmt, counter)


def sub(a: np.ndarray, b: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    return saturate(a - b, fmt, counter)


def mul(a: np.ndarray, b: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    product = requantize_array(a * b, fmt.fraction_bits, fmt.rounding)
    return saturate(product, fmt, counter)


def shift(a: np.ndarray, e: int, fmt: FixedFormat) -> np.ndarray:
    if e < 0 or e > fmt.total_bits:
        raise FixedPointError(f"shift {e} outside [0, {fmt.total_bits}]")
    return saturate(requantize_array(a, e, fmt.rounding), fmt)


def tree_sum(terms: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    """Adder tree over the last axis, adjacent pairs, saturating per level."""
    width = terms.shape[-1]
    if width < 1 or width & (width - 1):
        raise FixedPointError(f"fan-in {width} is not a power of two")
    level = terms
    while level.shape[-1] > 1:
        level = saturate(level[..., 0::2] + level[..., 1::2], fmt, counter)
    return level[..., 0]


def sequential_sum(terms: np.ndarray, fmt: FixedFormat, counter: Optional[ClipCounter] = None) -> np.ndarray:
    """Saturating accumulation along the last axis, column 0 first."""
    acc = np.zeros(terms.shape[:-1], dtype=RAW_DTYPE)
    for col in range(terms.shape[-1]):
        acc = saturate(acc + terms[..., col], fmt, counter)
    return acc
