"""Exception hierarchy shared by all sparsetrain modules."""

from typing import Optional


class SparseTrainError(Exception):
    """Base class for every error raised by the library."""


class FixedPointError(SparseTrainError, ValueError):
    """Invalid fixed-point operand or format."""


class TopologyError(SparseTrainError, ValueError):
    """A network or junction violates a structural invariant."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class IdxFormatError(SparseTrainError, ValueError):
    """Malformed IDX container."""


class ConfigError(SparseTrainError, ValueError):
    """A configuration field is missing or invalid."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class EngineError(SparseTrainError, RuntimeError):
    """Training arithmetic was called with inconsistent state."""


class ScheduleError(SparseTrainError, ValueError):
    """A clock, block cycle or sample index is out of range."""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message)
