"""Common utilities and shared functionality."""

from .errors import (
    ConfigError,
    EngineError,
    FixedPointError,
    IdxFormatError,
    ScheduleError,
    SparseTrainError,
    TopologyError,
)

from .logging_utils import (
    setup_logging,
    log_run_message,
    log_error,
)

__all__ = [
    # Errors
    "SparseTrainError",
    "FixedPointError",
    "TopologyError",
    "IdxFormatError",
    "ConfigError",
    "EngineError",
    "ScheduleError",
    # Logging utilities
    "setup_logging",
    "log_run_message",
    "log_error",
]
