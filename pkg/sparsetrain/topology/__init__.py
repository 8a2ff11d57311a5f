"""Pre-defined sparse topology, banked layout and clash-free interleavers."""

from .interleaver import (
    ClashCheck,
    ClockAccess,
    Interleaver,
    build_interleaver,
    build_interleavers,
    export_interleaver_csv,
    left_indices_for_clock,
    verify_clash_free,
)
from .network import (
    BASELINE_NETWORK,
    JunctionSpec,
    NetworkSpec,
    build_network,
    fully_connected_counterpart,
    is_power_of_two,
    load_network_spec,
    network_spec_from_dict,
    with_junction_density,
    with_z,
)

__all__ = [
    "JunctionSpec",
    "NetworkSpec",
    "BASELINE_NETWORK",
    "build_network",
    "fully_connected_counterpart",
    "with_z",
    "with_junction_density",
    "network_spec_from_dict",
    "load_network_spec",
    "is_power_of_two",
    "Interleaver",
    "ClashCheck",
    "ClockAccess",
    "build_interleaver",
    "build_interleavers",
    "left_indices_for_clock",
    "verify_clash_free",
    "export_interleaver_csv",
]
