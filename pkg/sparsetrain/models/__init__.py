"""Serialized report models."""

from .run_models import ClipStatsReport, EpochSummary, RunSummary
from .trace_models import Violation, ViolationReport

__all__ = [
    "EpochSummary",
    "RunSummary",
    "ClipStatsReport",
    "Violation",
    "ViolationReport",
]
