"""Saturating fixed-point number format and clipped arithmetic."""

from .format import (
    FixedFormat,
    FixedValue,
    Rounding,
    chain_sum,
    clip_add,
    clip_mul,
    clip_sub,
    quantize,
    requantize,
    shift_scale,
    tree_sum,
)
from .vector import ClipCounter

__all__ = [
    "FixedFormat",
    "FixedValue",
    "Rounding",
    "ClipCounter",
    "quantize",
    "requantize",
    "clip_add",
    "clip_sub",
    "clip_mul",
    "shift_scale",
    "tree_sum",
    "chain_sum",
]
