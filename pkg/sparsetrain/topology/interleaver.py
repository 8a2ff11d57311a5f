"""Clash-free interleavers for banked weight/activation memories.

Weights are numbered right-sequentially: slots [j*d_in, (j+1)*d_in) feed right
neuron j. The interleaver maps each slot to the left neuron on the other end of
that edge. Left neuron l lives in memory bank l mod z at address l div z, and
clock k touches slots [k*z, (k+1)*z).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np
import pandas as pd

from ..common.errors import ScheduleError, TopologyError
from .network import JunctionSpec, NetworkSpec

logger = logging.getLogger(__name__)


class ClashCheck(NamedTuple):
    ok: bool
    first_violation: Optional[int]


class ClockAccess(NamedTuple):
    indices: np.ndarray
    banks: np.ndarray
    addresses: np.ndarray


@dataclass(frozen=True, eq=False)
class Interleaver:
    """Weight slot -> left neuron permutation of one junction."""

    junction: JunctionSpec
    map: np.ndarray
    seed: Optional[int] = field(default=None)

    def __post_init__(self) -> None:
        m = np.array(self.map, dtype=np.int64)
        if m.shape != (self.junction.weights,):
            raise TopologyError(
                "interleaver_length", f"map has shape {m.shape}, expected ({self.junction.weights},)"
            )
        if m.size and (m.min() < 0 or m.max() >= self.junction.n_left):
            raise TopologyError("interleaver_range", "map entries must index left neurons")
        m.setflags(write=False)
        object.__setattr__(self, "map", m)

    @property
    def clocks(self) -> int:
        return self.junction.block_length

    @cached_property
    def right_of_slot(self) -> np.ndarray:
        r = np.arange(self.junction.weights, dtype=np.int64) // self.junction.d_in
        r.setflags(write=False)
        return r

    @cached_property
    def fanout(self) -> np.ndarray:
        return np.bincount(self.map, minlength=self.junction.n_left)

    @cached_property
    def fanout_slots(self) -> np.ndarray:
        """(N_left, d_out) slot indices per left neuron, ascending."""
        if np.any(self.fanout != self.junction.d_out):
            raise TopologyError("fan_out", "left neurons do not all have d_out edges")
        order = np.argsort(self.map, kind="stable")
        slots = order.reshape(self.junction.n_left, self.junction.d_out)
        slots.setflags(write=False)
        return slots

    def dense_mask(self) -> np.ndarray:
        """(N_right, N_left) boolean connectivity matrix."""
        mask = np.zeros((self.junction.n_right, self.junction.n_left), dtype=bool)
        mask[self.right_of_slot, self.map] = True
        return mask


def build_interleaver(j: JunctionSpec, seed: int) -> Interleaver:
    """Residue-class construction.

    Slot m may only hold a left neuron l with l = m (mod z); within each residue
    class the W/z slots take a seeded shuffle of the class neurons, each repeated
    d_out times. Every clock then reads each bank exactly once.
    """
    if j.z > j.n_left or j.n_left % j.z:
        raise TopologyError(
            "clash_free_width",
            f"z={j.z} banks need N_left={j.n_left} to be a multiple of z",
        )
    rng = np.random.default_rng(seed)
    per_class = j.n_left // j.z
    column = np.repeat(np.arange(per_class, dtype=np.int64), j.d_out)
    quotients = rng.permuted(np.tile(column[:, None], (1, j.z)), axis=0)
    mapping = (quotients * j.z + np.arange(j.z, dtype=np.int64)[None, :]).reshape(-1)
    return Interleaver(j, mapping, seed)


def build_interleavers(spec: NetworkSpec, seed: int) -> List[Interleaver]:
    return [build_interleaver(j, seed + i) for i, j in enumerate(spec.junctions)]


def left_indices_for_clock(ilv: Interleaver, k: int) -> ClockAccess:
    if not 0 <= k < ilv.clocks:
        raise ScheduleError(f"clock {k} outside [0, {ilv.clocks})", k)
    z = ilv.junction.z
    idx = ilv.map[k * z:(k + 1) * z]
    return ClockAccess(idx, idx % z, idx // z)


def verify_clash_free(ilv: Interleaver) -> ClashCheck:
    z = ilv.junction.z
    banks = np.sort((ilv.map % z).reshape(ilv.clocks, z), axis=1)
    clashes = np.any(banks[:, 1:] == banks[:, :-1], axis=1)
    if clashes.any():
        first = int(np.argmax(clashes))
        logger.debug(f"Bank clash at clock {first}")
        return ClashCheck(False, first)
    return ClashCheck(True, None)


def export_interleaver_csv(ilv: Interleaver, path: str | Path) -> Path:
    z = ilv.junction.z
    slots = np.arange(ilv.junction.weights)
    frame = pd.DataFrame({
        "slot": slots,
        "left_index": ilv.map,
        "bank": ilv.map % z,
        "address": ilv.map // z,
        "clock": slots // z,
        "right_neuron": ilv.right_of_slot,
    })
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path
