"""Run summaries and training-metric models."""

from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class EpochSummary(BaseModel):
    """End-of-epoch snapshot of the training metrics."""
    epoch: int = Field(..., ge=1)
    eta_exponent: int = Field(..., description="Learning rate is 2^-eta_exponent")
    rolling_accuracy: float = Field(..., description="Accuracy over the most recent window of samples, in percent")
    max_abs_w: float
    max_abs_b: float
    max_abs_delta: float
    clip_count: int = Field(..., description="Cumulative saturation events since the run started")


class RunSummary(BaseModel):
    """JSON summary written next to metrics.csv after a training run."""
    network: Dict[str, Any] = Field(default_factory=dict)
    format: Optional[str] = Field(None, description="Bit triplet and rounding mode, None for the float backend")
    backend: str
    activation: str
    cost: str
    update_semantics: str
    epochs: int
    epoch_size: int
    init_seed: int
    interleaver_seed: int
    final_accuracy: Optional[float] = None
    epoch_summaries: List[EpochSummary] = Field(default_factory=list)
    clip_count: int = 0
    test_accuracy: Optional[float] = Field(
        None, description="Held-out accuracy; not part of the rolling-window protocol"
    )
    wall_time_s: float = 0.0
    finished_at: datetime = Field(default_factory=datetime.now)


class ClipStatsReport(BaseModel):
    """Hidden-layer pre-activation magnitudes of an ideal floating point run."""
    which: str = Field(..., description="'sparse' or 'fc'")
    densities: List[float]
    epochs: int
    window: int
    bound: float = Field(..., description="Dynamic range bound 2^b_n")
    n_values: int
    clipped_fraction: float
    mean_abs: float
    variance: float = Field(..., description="Sample variance of |s|")
    max_abs: float
    histogram: List[int] = Field(default_factory=list)
    bin_edges: List[float] = Field(default_factory=list)
