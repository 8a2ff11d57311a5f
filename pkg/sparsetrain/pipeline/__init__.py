"""Junction-pipelined schedule, stale-parameter views and memory-trace checks."""

from .schedule import (
    PIPELINE_OVERHEAD_CLOCKS,
    ParamHistory,
    ScheduleSlot,
    UpdateSemantics,
    block_cycle_clocks,
    pipeline_fill_cycles,
    queue_depth,
    schedule_at,
    stale_update_view,
    steady_state_samples,
)
from .trace import (
    Access,
    AccessTrace,
    MemoryBankModel,
    MemoryKind,
    MemorySpec,
    Op,
    PortType,
    TraceResult,
    simulate_trace,
)

__all__ = [
    "PIPELINE_OVERHEAD_CLOCKS",
    "ParamHistory",
    "ScheduleSlot",
    "UpdateSemantics",
    "block_cycle_clocks",
    "pipeline_fill_cycles",
    "queue_depth",
    "schedule_at",
    "stale_update_view",
    "steady_state_samples",
    "Access",
    "AccessTrace",
    "MemoryBankModel",
    "MemoryKind",
    "MemorySpec",
    "Op",
    "PortType",
    "TraceResult",
    "simulate_trace",
]
