"""Clock-level memory access trace of the junction pipeline and its port check.

Within a block cycle, clock k of junction i touches weight cell k of every
weight bank and the z left neurons the interleaver assigns to slots
[k*z, (k+1)*z). Results of clock k are written at clock k+2, and UP writes
weight cell k back at clock k+1. Queued memories are addressed by
(sample mod queue depth), delta memories by (sample mod 2).

Biases are folded into the weight memories for sizing but not traced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..common.errors import ScheduleError, TopologyError
from ..models import Violation, ViolationReport
from ..topology import Interleaver, NetworkSpec, build_network, verify_clash_free
from .schedule import PIPELINE_OVERHEAD_CLOCKS, queue_depth, schedule_at

logger = logging.getLogger(__name__)


class MemoryKind(IntEnum):
    WEIGHT = 0
    ACT = 1
    ADOT = 2
    DELTA = 3


class PortType(str, Enum):
    SIMPLE_DUAL = "simple-dual-port"
    SINGLE = "single-port"
    TRUE_DUAL = "true-dual-port"


class Access(IntEnum):
    READ = 0
    WRITE = 1


class Op(IntEnum):
    FF = 0
    BP = 1
    UP = 2
    LOAD = 3
    COST = 4


RECORD_DTYPE = np.dtype(
    [
        ("clock", np.int64),
        ("block_cycle", np.int64),
        ("junction", np.int16),
        ("memory", np.int8),
        ("layer", np.int16),
        ("slot", np.int32),
        ("bank", np.int32),
        ("address", np.int32),
        ("access", np.int8),
        ("op", np.int8),
    ]
)

_LAYER_BITS, _SLOT_BITS, _BANK_BITS, _CLOCK_BITS = 6, 10, 20, 16


@dataclass(frozen=True)
class MemorySpec:
    kind: MemoryKind
    layer: int
    banks: int
    slots: int
    words_per_bank: int
    port: PortType

    def bits(self, word_bits: int) -> int:
        return self.banks * self.slots * self.words_per_bank * word_bits


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class MemoryBankModel:
    """Banked memories of the datapath.

    Weight memories of junction i have z_i banks plus ceil(N_i/z_i) bias words
    per bank. Layer-l activations and derivatives are banked by their reader,
    z_{l+1}, and queued over queue_depth(l) copies. Deltas of layer l are banked
    by the junction that accumulates them (z_{l+1}, or z_L for the output) and
    ping-pong between two copies.
    """

    spec: NetworkSpec
    queue_depths: Tuple[int, ...]
    memories: Tuple[MemorySpec, ...] = field(default_factory=tuple)

    @classmethod
    def for_network(cls, spec: NetworkSpec, queue_depths: Optional[Sequence[int]] = None) -> "MemoryBankModel":
        L = spec.num_junctions
        if queue_depths is None:
            queue_depths = [queue_depth(l, L) for l in range(L + 1)]
        depths = tuple(int(d) for d in queue_depths)
        if len(depths) != L + 1 or min(depths) < 1:
            raise ScheduleError(f"need {L + 1} positive queue depths, got {list(depths)}")
        memories: List[MemorySpec] = []
        for i, j in enumerate(spec.junctions, start=1):
            words = j.block_length + _ceil_div(j.n_right, j.z)
            memories.append(MemorySpec(MemoryKind.WEIGHT, i, j.z, 1, words, PortType.SIMPLE_DUAL))
        for l in range(L):
            banks = spec.junctions[l].z
            words = _ceil_div(spec.layer_sizes[l], banks)
            memories.append(MemorySpec(MemoryKind.ACT, l, banks, depths[l], words, PortType.SINGLE))
            if l >= 1:
                memories.append(MemorySpec(MemoryKind.ADOT, l, banks, depths[l], words, PortType.SINGLE))
        for l in range(1, L + 1):
            banks = spec.junctions[l].z if l < L else spec.junctions[L - 1].z
            words = _ceil_div(spec.layer_sizes[l], banks)
            memories.append(MemorySpec(MemoryKind.DELTA, l, banks, 2, words, PortType.TRUE_DUAL))
        return cls(spec, depths, tuple(memories))

    def memory(self, kind: MemoryKind, layer: int) -> MemorySpec:
        for m in self.memories:
            if m.kind is kind and m.layer == layer:
                return m
        raise ScheduleError(f"no {kind.name} memory for layer {layer}", layer)

    def bits_by_kind(self, word_bits: int) -> Dict[str, int]:
        totals: Dict[str, int] = {}
        for m in self.memories:
            name = m.kind.name.lower()
            totals[name] = totals.get(name, 0) + m.bits(word_bits)
        return totals


@dataclass(frozen=True)
class _Pattern:
    """Accesses one operation issues every block cycle it is active."""

    kind: MemoryKind
    layer: int
    clocks: np.ndarray
    banks: np.ndarray
    addresses: np.ndarray
    access: Access
    op: Op
    slots: int


def _natural(n: int, per_clock: int, banks: int, offset: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    neurons = np.arange(n, dtype=np.int64)
    return neurons // per_clock + offset, neurons % banks, neurons // banks


def _permuted(ilv: Interleaver, banks: int, offset: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    slots = np.arange(ilv.junction.weights, dtype=np.int64)
    return slots // ilv.junction.z + offset, ilv.map % banks, ilv.map // banks


class _JunctionPatterns:
    def __init__(self, i: int, ilv: Interleaver, model: MemoryBankModel):
        L = model.spec.num_junctions
        j = ilv.junction
        self.i = i
        act = model.memory(MemoryKind.ACT, i - 1)
        delta_out = model.memory(MemoryKind.DELTA, i)
        cells = np.arange(j.block_length, dtype=np.int64)
        w_clocks, w_banks = np.repeat(cells, j.z), np.tile(np.arange(j.z, dtype=np.int64), j.block_length)
        self.weight_read = _Pattern(MemoryKind.WEIGHT, i, w_clocks, w_banks, w_clocks, Access.READ, Op.FF, 1)
        self.weight_read_up = _Pattern(MemoryKind.WEIGHT, i, w_clocks, w_banks, w_clocks, Access.READ, Op.UP, 1)
        self.weight_write = _Pattern(MemoryKind.WEIGHT, i, w_clocks + 1, w_banks, w_clocks, Access.WRITE, Op.UP, 1)
        self.ff_read = _Pattern(MemoryKind.ACT, i - 1, *_permuted(ilv, act.banks, 0), Access.READ, Op.FF, act.slots)
        self.up_read = _Pattern(MemoryKind.ACT, i - 1, *_permuted(ilv, act.banks, 0), Access.READ, Op.UP, act.slots)
        per_clock = j.neurons_per_clock
        self.delta_read = _Pattern(
            MemoryKind.DELTA, i, *_natural(j.n_right, per_clock, delta_out.banks, 0), Access.READ, Op.UP, 2
        )
        self.ff_writes: List[_Pattern] = []
        if i < L:
            for kind in (MemoryKind.ACT, MemoryKind.ADOT):
                out = model.memory(kind, i)
                self.ff_writes.append(
                    _Pattern(kind, i, *_natural(j.n_right, per_clock, out.banks, 2), Access.WRITE, Op.FF, out.slots)
                )
        else:
            self.ff_writes.append(
                _Pattern(
                    MemoryKind.DELTA, i, *_natural(j.n_right, per_clock, delta_out.banks, 2), Access.WRITE, Op.COST, 2
                )
            )
        self.bp: List[_Pattern] = []
        if i >= 2:
            adot = model.memory(MemoryKind.ADOT, i - 1)
            partial = model.memory(MemoryKind.DELTA, i - 1)
            self.bp = [
                _Pattern(MemoryKind.ADOT, i - 1, *_permuted(ilv, adot.banks, 0), Access.READ, Op.BP, adot.slots),
                _Pattern(MemoryKind.DELTA, i - 1, *_permuted(ilv, partial.banks, 0), Access.READ, Op.BP, 2),
                _Pattern(MemoryKind.DELTA, i - 1, *_permuted(ilv, partial.banks, 2), Access.WRITE, Op.BP, 2),
            ]

    def active(self, ff: int, up: int) -> List[Tuple[_Pattern, int]]:
        out: List[Tuple[_Pattern, int]] = []
        if ff >= 0:
            out.append((self.weight_read, ff))
        elif up >= 0:
            out.append((self.weight_read_up, up))
        if ff >= 0:
            out.append((self.ff_read, ff))
            out.extend((p, ff) for p in self.ff_writes)
        if up >= 0:
            out.extend([(self.up_read, up), (self.delta_read, up), (self.weight_write, up)])
            out.extend((p, up) for p in self.bp)
        return out


def _records(p: _Pattern, t: int, clocks_per_cycle: int, junction: int, sample: int) -> np.ndarray:
    rec = np.empty(len(p.clocks), dtype=RECORD_DTYPE)
    rec["clock"] = t * clocks_per_cycle + p.clocks
    rec["block_cycle"] = t
    rec["junction"] = junction
    rec["memory"] = p.kind
    rec["layer"] = p.layer
    rec["slot"] = sample % p.slots
    rec["bank"] = p.banks
    rec["address"] = p.addresses
    rec["access"] = p.access
    rec["op"] = p.op
    return rec


def _describe(rec: np.ndarray) -> List[str]:
    return [
        f"J{int(r['junction'])} {Op(r['op']).name} {Access(r['access']).name.lower()} addr {int(r['address'])}"
        for r in rec
    ]


class _PortChecker:
    def __init__(self, clocks_per_cycle: int, max_reports: int):
        self.clocks_per_cycle = clocks_per_cycle
        self.max_reports = max_reports
        self.violations: List[Violation] = []
        self.count = 0

    def _report(self, groups: List[np.ndarray], rule: str, total: Optional[int] = None) -> None:
        self.count += len(groups) if total is None else total
        for rec in groups[: max(0, self.max_reports - len(self.violations))]:
            r = rec[0]
            self.violations.append(
                Violation(
                    clock=int(r["clock"]),
                    block_cycle=int(r["block_cycle"]),
                    memory=MemoryKind(r["memory"]).name,
                    layer=int(r["layer"]),
                    slot=int(r["slot"]),
                    bank=int(r["bank"]),
                    rule=rule,
                    accesses=_describe(rec),
                )
            )

    @staticmethod
    def _key(rec: np.ndarray, clocks_per_cycle: int) -> np.ndarray:
        key = rec["memory"].astype(np.int64)
        key = (key << _LAYER_BITS) | rec["layer"]
        key = (key << _SLOT_BITS) | rec["slot"]
        key = (key << _BANK_BITS) | rec["bank"]
        return (key << _CLOCK_BITS) | (rec["clock"] % clocks_per_cycle)

    def _over_capacity(self, rec: np.ndarray, key: np.ndarray, capacity: int, rule: str) -> None:
        if not len(key):
            return
        _, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
        bad = np.nonzero(counts > capacity)[0]
        if not len(bad):
            return
        shown = bad[: max(0, self.max_reports - len(self.violations))]
        self._report([rec[inverse == g] for g in shown], rule, total=len(bad))

    def check(self, rec: np.ndarray) -> None:
        key = self._key(rec, self.clocks_per_cycle)
        kind = rec["memory"]
        single = (kind == MemoryKind.ACT) | (kind == MemoryKind.ADOT)
        self._over_capacity(rec[single], key[single], 1, "single-port: one access per clock")
        dual = kind == MemoryKind.DELTA
        self._over_capacity(rec[dual], key[dual], 2, "true dual-port: two accesses per clock")
        weight = kind == MemoryKind.WEIGHT
        w_rec, w_key = rec[weight], key[weight]
        self._over_capacity(
            w_rec, (w_key << 1) | w_rec["access"], 1, "simple dual-port: one read and one write per clock"
        )
        order = np.lexsort((w_rec["access"], w_key))
        w_rec, w_key = w_rec[order], w_key[order]
        same = (
            (w_key[1:] == w_key[:-1])
            & (w_rec["access"][:-1] == Access.READ)
            & (w_rec["access"][1:] == Access.WRITE)
            & (w_rec["address"][1:] == w_rec["address"][:-1])
        )
        self._report([w_rec[k:k + 2] for k in np.nonzero(same)[0]], "simple dual-port: read and write of the same address")


@dataclass
class AccessTrace:
    """Per-block-cycle access records, replayable through the port check."""

    clocks_per_block_cycle: int
    block_cycles: List[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return sum(len(b) for b in self.block_cycles)

    def records(self) -> np.ndarray:
        if not self.block_cycles:
            return np.empty(0, dtype=RECORD_DTYPE)
        return np.concatenate(self.block_cycles)

    def to_frame(self) -> pd.DataFrame:
        rec = self.records()
        frame = pd.DataFrame({name: rec[name] for name in RECORD_DTYPE.names})
        frame["memory"] = [MemoryKind(m).name for m in rec["memory"]]
        frame["access"] = [Access(a).name.lower() for a in rec["access"]]
        frame["op"] = [Op(o).name for o in rec["op"]]
        return frame

    def export_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    def check(self, max_reports: int = 20) -> Tuple[int, List[Violation]]:
        checker = _PortChecker(self.clocks_per_block_cycle, max_reports)
        for rec in self.block_cycles:
            checker.check(rec)
        return checker.count, checker.violations


@dataclass
class TraceResult:
    trace: AccessTrace
    report: ViolationReport
    model: MemoryBankModel


def _check_packing(model: MemoryBankModel, clocks_per_cycle: int) -> None:
    limits = {
        "layers": (model.spec.num_junctions + 1, 1 << _LAYER_BITS),
        "queue depth": (max(m.slots for m in model.memories), 1 << _SLOT_BITS),
        "banks": (max(m.banks for m in model.memories), 1 << _BANK_BITS),
        "clocks per block cycle": (clocks_per_cycle, 1 << _CLOCK_BITS),
    }
    for name, (value, limit) in limits.items():
        if value > limit:
            raise ScheduleError(f"{name} {value} exceeds the trace limit {limit}")


def simulate_trace(
    spec: NetworkSpec,
    interleavers: Sequence[Interleaver],
    n_block_cycles: int,
    queue_depths: Optional[Sequence[int]] = None,
    keep_block_cycles: int = 16,
    max_reports: int = 20,
) -> TraceResult:
    """Generate the access trace of ``n_block_cycles`` and check every port rule.

    Only the first ``keep_block_cycles`` are retained in the returned trace;
    every block cycle is checked.
    """
    spec = build_network(spec)
    if len(interleavers) != spec.num_junctions:
        raise TopologyError("layer_count", f"{len(interleavers)} interleavers for {spec.num_junctions} junctions")
    for i, ilv in enumerate(interleavers, start=1):
        if ilv.junction != spec.junction(i):
            raise TopologyError("interleaver_junction", f"interleaver {i} was built for another junction")
    if n_block_cycles < 0:
        raise ScheduleError(f"negative block cycle count {n_block_cycles}", n_block_cycles)

    model = MemoryBankModel.for_network(spec, queue_depths)
    clocks_per_cycle = spec.block_length + PIPELINE_OVERHEAD_CLOCKS
    _check_packing(model, clocks_per_cycle)
    L = spec.num_junctions
    patterns = [_JunctionPatterns(i, ilv, model) for i, ilv in enumerate(interleavers, start=1)]
    first = spec.junctions[0]
    staging = model.memory(MemoryKind.ACT, 0)
    load = _Pattern(
        MemoryKind.ACT, 0, *_natural(spec.layer_sizes[0], first.z, staging.banks, 0), Access.WRITE, Op.LOAD, staging.slots
    )

    clash_free = all(verify_clash_free(ilv).ok for ilv in interleavers)
    checker = _PortChecker(clocks_per_cycle, max_reports)
    trace = AccessTrace(clocks_per_cycle)
    checked = 0
    for t in range(n_block_cycles):
        slot = schedule_at(t, L)
        parts = [_records(load, t, clocks_per_cycle, 0, t + 1)]
        for jp in patterns:
            for pattern, sample in jp.active(slot.ff(jp.i), slot.up(jp.i)):
                parts.append(_records(pattern, t, clocks_per_cycle, jp.i, sample))
        rec = np.concatenate(parts)
        checker.check(rec)
        checked += len(rec)
        if t < keep_block_cycles:
            trace.block_cycles.append(rec)

    report = ViolationReport(
        block_cycles=n_block_cycles,
        clocks_per_block_cycle=clocks_per_cycle,
        accesses_checked=checked,
        interleavers_clash_free=clash_free,
        violation_count=checker.count,
        violations=checker.violations,
    )
    logger.info(
        f"Trace of {n_block_cycles} block cycles: {checked} accesses, {checker.count} violations"
    )
    return TraceResult(trace, report, model)
