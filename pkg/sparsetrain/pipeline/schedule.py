"""Junction-pipelined schedule at block-cycle granularity.

In block cycle ``t`` of an ``L``-junction network, junction ``i`` runs FF on
sample ``t - (i - 1)`` and BP plus UP on sample ``t - (2L - i)``. Negative sample
ids are pipeline-fill no-ops.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Generic, Optional, Tuple, TypeVar

from ..common.errors import ScheduleError
from ..topology import JunctionSpec

PIPELINE_OVERHEAD_CLOCKS = 2

P = TypeVar("P")


class UpdateSemantics(str, Enum):
    SEQUENTIAL = "sequential"
    PIPELINED_STALE = "pipelined-stale"


@dataclass(frozen=True)
class ScheduleSlot:
    """Sample ids handled by every junction in one block cycle (1-based junctions)."""

    t: int
    num_junctions: int
    ff_input: Tuple[int, ...]
    bp_input: Tuple[Optional[int], ...]
    up_input: Tuple[int, ...]

    def ff(self, i: int) -> int:
        return self.ff_input[i - 1]

    def bp(self, i: int) -> Optional[int]:
        return self.bp_input[i - 1]

    def up(self, i: int) -> int:
        return self.up_input[i - 1]

    def active(self, sample: Optional[int], total: Optional[int] = None) -> bool:
        """Whether a slot holds a real sample rather than a fill or drain no-op."""
        if sample is None or sample < 0:
            return False
        return total is None or sample < total


def schedule_at(t: int, num_junctions: int) -> ScheduleSlot:
    if t < 0:
        raise ScheduleError(f"block cycle {t} is negative", t)
    if num_junctions < 1:
        raise ScheduleError(f"need at least one junction, got {num_junctions}")
    L = num_junctions
    ff = tuple(t - (i - 1) for i in range(1, L + 1))
    up = tuple(t - (2 * L - i) for i in range(1, L + 1))
    bp = (None,) + up[1:]
    return ScheduleSlot(t, L, ff, bp, up)


def block_cycle_clocks(j: JunctionSpec) -> int:
    return j.block_length + PIPELINE_OVERHEAD_CLOCKS


def queue_depth(i: int, num_junctions: int) -> int:
    """Banks in the queue holding layer ``i`` activations.

    Layer ``i`` is produced by junction ``i``'s FF and consumed again by junction
    ``i + 1``'s UP (and BP) ``2(L - i) + 1`` block cycles later; one more bank is
    being written. ``i = 0`` is the input staging queue.
    """
    if not 0 <= i <= num_junctions:
        raise ScheduleError(f"layer {i} outside [0, {num_junctions}]", i)
    return 2 * (num_junctions - i) + 2


def pipeline_fill_cycles(num_junctions: int) -> int:
    return 2 * num_junctions - 1


def steady_state_samples(t: int, num_junctions: int) -> int:
    """Samples whose last UP (junction 1) has finished by the end of block cycle ``t``."""
    return max(0, t - pipeline_fill_cycles(num_junctions) + 1)


class ParamHistory(Generic[P]):
    """End-of-block-cycle parameter snapshots, bounded to the most recent ``depth``.

    Snapshots are stored as given; callers hand in copies they will not mutate.
    """

    def __init__(self, initial: P, depth: int = 2):
        if depth < 1:
            raise ScheduleError(f"history depth must be positive, got {depth}")
        self.initial = initial
        self.depth = depth
        self._snapshots: "OrderedDict[int, P]" = OrderedDict()

    def commit(self, t: int, params: P) -> None:
        if self._snapshots and t <= next(reversed(self._snapshots)):
            raise ScheduleError(f"block cycle {t} committed out of order", t)
        self._snapshots[t] = params
        while len(self._snapshots) > self.depth:
            self._snapshots.popitem(last=False)

    def at_end_of(self, t: int) -> P:
        if t < 0:
            return self.initial
        if t not in self._snapshots:
            raise ScheduleError(f"no snapshot for block cycle {t}", t)
        return self._snapshots[t]

    @property
    def latest(self) -> P:
        if not self._snapshots:
            return self.initial
        return next(reversed(self._snapshots.values()))


def stale_update_view(
    history: ParamHistory[Any],
    t: int,
    i: int,
    semantics: UpdateSemantics = UpdateSemantics.PIPELINED_STALE,
) -> Any:
    """Junction ``i``'s parameters as read during block cycle ``t``.

    Pipelined: the snapshot at the end of block cycle ``t - 1`` (the initial
    parameters when ``t == 0``). Sequential: whatever was committed last.
    Snapshots must provide ``junction(i)``.
    """
    if i < 1:
        raise ScheduleError(f"junction {i} is not 1-based", i)
    if semantics is UpdateSemantics.SEQUENTIAL:
        return history.latest.junction(i)
    return history.at_end_of(t - 1).junction(i)
