"""Saturating two's-complement fixed-point numbers.

A format is the bit triplet (b_w, b_n, b_f) with b_w = b_n + b_f + 1. Values are
stored as a signed integer ``raw`` in units of 2**-b_f. Every operation here keeps
the triplet between inputs and outputs: out-of-range results pin to the nearest
representable extreme instead of wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence, Union

from ..common.errors import FixedPointError

MIN_TOTAL_BITS = 4
MAX_TOTAL_BITS = 32


class Rounding(str, Enum):
    """How a value with too many fractional bits is brought back to b_f bits."""

    TRUNCATE = "truncate"
    NEAREST_EVEN = "round-nearest-even"

    @classmethod
    def parse(cls, value: Union[str, "Rounding"]) -> "Rounding":
        if isinstance(value, Rounding):
            return value
        aliases = {"truncate": cls.TRUNCATE, "floor": cls.TRUNCATE,
                   "round-nearest-even": cls.NEAREST_EVEN, "nearest": cls.NEAREST_EVEN,
                   "nearest-even": cls.NEAREST_EVEN}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise FixedPointError(f"unknown rounding mode '{value}'") from None


@dataclass(frozen=True)
class FixedFormat:
    """The bit triplet plus the requantization rule for products and shifts."""

    total_bits: int
    integer_bits: int
    fraction_bits: int
    rounding: Rounding = Rounding.TRUNCATE

    def __post_init__(self) -> None:
        object.__setattr__(self, "rounding", Rounding.parse(self.rounding))
        if self.integer_bits < 0 or self.fraction_bits < 0:
            raise FixedPointError(f"negative bit count in {self.triplet}")
        if self.total_bits != self.integer_bits + self.fraction_bits + 1:
            raise FixedPointError(
                f"triplet {self.triplet} violates b_w = b_n + b_f + 1"
            )
        if not MIN_TOTAL_BITS <= self.total_bits <= MAX_TOTAL_BITS:
            raise FixedPointError(
                f"total bits {self.total_bits} outside [{MIN_TOTAL_BITS}, {MAX_TOTAL_BITS}]"
            )

    @classmethod
    def from_triplet(cls, triplet: Sequence[int], rounding: Union[str, Rounding] = Rounding.TRUNCATE) -> "FixedFormat":
        if len(triplet) != 3:
            raise FixedPointError(f"expected [b_w, b_n, b_f], got {list(triplet)}")
        b_w, b_n, b_f = (int(v) for v in triplet)
        return cls(b_w, b_n, b_f, Rounding.parse(rounding))

    def with_rounding(self, rounding: Union[str, Rounding]) -> "FixedFormat":
        return replace(self, rounding=Rounding.parse(rounding))

    @property
    def triplet(self) -> tuple[int, int, int]:
        return (self.total_bits, self.integer_bits, self.fraction_bits)

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def scale(self) -> int:
        return 1 << self.fraction_bits

    @property
    def lsb(self) -> float:
        return 2.0 ** -self.fraction_bits

    @property
    def min_value(self) -> float:
        return self.raw_min * self.lsb

    @property
    def max_value(self) -> float:
        return self.raw_max * self.lsb

    def saturate_raw(self, raw: int) -> int:
        return min(max(raw, self.raw_min), self.raw_max)

    def to_dict(self) -> dict:
        return {"triplet": list(self.triplet), "rounding": self.rounding.value}

    def __str__(self) -> str:
        b_w, b_n, b_f = self.triplet
        return f"({b_w},{b_n},{b_f})/{self.rounding.value}"


@dataclass(frozen=True)
class FixedValue:
    """A single sample in a FixedFormat."""

    raw: int
    format: FixedFormat

    def __post_init__(self) -> None:
        if not self.format.raw_min <= self.raw <= self.format.raw_max:
            raise FixedPointError(f"raw {self.raw} does not fit {self.format}")

    @classmethod
    def from_real(cls, x: float, fmt: FixedFormat) -> "FixedValue":
        return quantize(x, fmt)

    @property
    def value(self) -> float:
        return self.raw * self.format.lsb

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"FixedValue({self.value!r}, raw={self.raw}, {self.format})"


def requantize(raw: int, shift: int, rounding: Rounding) -> int:
    """Drop ``shift`` fractional bits from an exact integer."""
    if shift < 0:
        raise FixedPointError(f"negative shift {shift}")
    if shift == 0:
        return raw
    q = raw >> shift  # floor
    if rounding is Rounding.TRUNCATE:
        return q
    rem = raw - (q << shift)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and q & 1):
        q += 1
    return q


def quantize(x: float, fmt: FixedFormat) -> FixedValue:
    """Nearest in-range value to ``x`` under the format's rounding mode."""
    if not math.isfinite(x):
        raise FixedPointError("non-finite operand")
    # clamp first so that scaling cannot overflow to inf
    x = min(max(x, fmt.min_value - 1.0), fmt.max_value + 1.0)
    scaled = x * fmt.scale
    if fmt.rounding is Rounding.TRUNCATE:
        raw = math.floor(scaled)
    else:
        raw = round(scaled)  # Python rounds half to even
    return FixedValue(fmt.saturate_raw(int(raw)), fmt)


def _same_format(a: FixedValue, b: FixedValue) -> FixedFormat:
    if a.format != b.format:
        raise FixedPointError(f"format mismatch: {a.format} vs {b.format}")
    return a.format


def clip_add(a: FixedValue, b: FixedValue) -> FixedValue:
    fmt = _same_format(a, b)
    return FixedValue(fmt.saturate_raw(a.raw + b.raw), fmt)


def clip_sub(a: FixedValue, b: FixedValue) -> FixedValue:
    fmt = _same_format(a, b)
    return FixedValue(fmt.saturate_raw(a.raw - b.raw), fmt)


def clip_mul(a: FixedValue, b: FixedValue) -> FixedValue:
    fmt = _same_format(a, b)
    product = requantize(a.raw * b.raw, fmt.fraction_bits, fmt.rounding)
    return FixedValue(fmt.saturate_raw(product), fmt)


def shift_scale(a: FixedValue, e: int) -> FixedValue:
    """Multiply by 2**-e; the learning-rate step of the update."""
    fmt = a.format
    if e < 0 or e > fmt.total_bits:
        raise FixedPointError(f"shift {e} outside [0, {fmt.total_bits}]")
    return FixedValue(fmt.saturate_raw(requantize(a.raw, e, fmt.rounding)), fmt)


def tree_sum(vals: Sequence[FixedValue], fan_in: int) -> FixedValue:
    """Balanced binary adder tree, saturating at every node.

    Pairs are (0,1), (2,3), ... at each level. Saturating addition is not
    associative, so this pairing is part of the result.
    """
    if fan_in < 1 or fan_in & (fan_in - 1):
        raise FixedPointError(f"fan-in {fan_in} is not a power of two")
    if len(vals) != fan_in:
        raise FixedPointError(f"expected {fan_in} operands, got {len(vals)}")
    level = list(vals)
    fmt = level[0].format
    for v in level:
        _same_format(level[0], v)
    while len(level) > 1:
        level = [FixedValue(fmt.saturate_raw(level[k].raw + level[k + 1].raw), fmt)
                 for k in range(0, len(level), 2)]
    return level[0]


def chain_sum(vals: Iterable[FixedValue], fmt: FixedFormat) -> FixedValue:
    """Left-to-right saturating accumulation starting from zero."""
    acc = FixedValue(0, fmt)
    for v in vals:
        acc = clip_add(acc, v)
    return acc
