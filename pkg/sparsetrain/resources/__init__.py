"""Resource, memory and throughput estimates with device fit checks."""

from .estimator import (
    BASELINE_DEVICE,
    DeviceProfile,
    DspPolicy,
    FitReport,
    JunctionResources,
    ResourceEstimate,
    TreeAdders,
    default_z_candidates,
    estimate,
    fit_check,
    load_device_profile,
    render_estimate_table,
    sweep_z,
)

__all__ = [
    "BASELINE_DEVICE",
    "DeviceProfile",
    "DspPolicy",
    "FitReport",
    "JunctionResources",
    "ResourceEstimate",
    "TreeAdders",
    "default_z_candidates",
    "estimate",
    "fit_check",
    "load_device_profile",
    "render_estimate_table",
    "sweep_z",
]
