"""Closed-form arithmetic-unit, memory and throughput estimates.

Counts follow the datapath: every junction has z multipliers for FF and z for
UP, junctions with BP add 2z more, and FF sums each right neuron with a
log2(d_in)-deep adder tree. Memory sizes use the bank model of the trace
simulator. LUT and flip-flop usage are synthesis dependent and not estimated.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
import yaml
from pydantic import BaseModel, Field, PositiveFloat, PositiveInt
from rich.table import Table

from ..common.errors import ConfigError, TopologyError
from ..fixedpoint import FixedFormat
from ..pipeline import MemoryBankModel, MemoryKind, block_cycle_clocks
from ..topology import NetworkSpec, build_network, with_z

logger = logging.getLogger(__name__)

GROUND_TRUTH_WORD_BITS = 10
PIXEL_BITS = 8
PIXELS_PER_IMAGE = 784


class DeviceProfile(BaseModel):
    name: str
    dsp_count: PositiveInt
    bram_kbits: PositiveFloat = Field(..., description="Block RAM capacity in kbit (1 kbit = 1024 bits)")
    logic_note: str = ""

    @property
    def bram_bits(self) -> int:
        return int(self.bram_kbits * 1024)


BASELINE_DEVICE = DeviceProfile(
    name="artix7-240dsp", dsp_count=240, bram_kbits=4860, logic_note="Artix-7 class, 240 DSP slices"
)


def load_device_profile(path: Union[str, Path]) -> DeviceProfile:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    data = data.get("device", data)
    try:
        return DeviceProfile(**data)
    except Exception as e:
        raise ConfigError("device", f"invalid device profile in {path}: {e}") from None


class DspPolicy(str, Enum):
    FF_BP = "ff+bp"
    ALL = "all"
    NONE = "none"


class TreeAdders(BaseModel):
    junction: int
    count: int = Field(..., description="Adder trees, one per right neuron finished per clock")
    depth: int


class JunctionResources(BaseModel):
    junction: int
    z: int
    d_in: int
    block_length: int
    ff_multipliers: int
    bp_multipliers: int
    up_multipliers: int
    up_adders: int
    bp_partial_sums: int
    sigmoid_luts: int
    tree: TreeAdders


class ResourceEstimate(BaseModel):
    network: Dict[str, Any]
    format: str
    ff_multipliers: int
    bp_multipliers: int
    up_multipliers: int
    dsp_mapped_multipliers: int = Field(..., description="FF and BP multipliers, the ones placed on DSP slices")
    ff_tree_adders: List[TreeAdders]
    bp_partial_sums: int
    up_adders: int
    sigmoid_lut_count: int
    memory_bits: Dict[str, int]
    provisioned_memory_bits: Dict[str, int] = Field(default_factory=dict, description="Bits after bank rounding")
    total_memory_bits: int
    weight_memory_banks: int
    weight_memory_depth: int
    block_cycle_clocks: int
    clock_freq_hz: float
    block_cycle_seconds: float
    throughput_samples_per_s: float
    gops: float = Field(..., description="Arithmetic operations per second, in 1e9")
    junctions: List[JunctionResources]

    def multipliers(self, policy: DspPolicy) -> int:
        if policy is DspPolicy.ALL:
            return self.ff_multipliers + self.bp_multipliers + self.up_multipliers
        if policy is DspPolicy.NONE:
            return 0
        return self.dsp_mapped_multipliers


class FitReport(BaseModel):
    device: str
    dsp_policy: DspPolicy
    dsp_required: int
    dsp_available: int
    memory_bits_required: int
    memory_bits_available: int
    input_data_bits: int
    must_stream_inputs: bool
    fits: bool
    warnings: List[str] = Field(default_factory=list)

    @property
    def summary(self) -> str:
        verdict = "fits" if self.fits else "does not fit"
        return f"{verdict}: {self.dsp_required}/{self.dsp_available} DSP"


def _ops_per_sample(spec: NetworkSpec) -> int:
    ops = 0
    for i, j in enumerate(spec.junctions, start=1):
        ops += 2 * j.weights + j.n_right  # FF multiply-adds and bias add
        if i >= 2:
            ops += 3 * j.weights  # BP: w*delta, times derivative, accumulate
        ops += 2 * j.weights + j.n_right  # UP: a*delta and subtract; bias subtract
    return ops


def estimate(
    net: NetworkSpec,
    fmt: FixedFormat,
    epoch_size: int = 12544,
    n_classes: int = 10,
) -> ResourceEstimate:
    spec = build_network(net)
    L = spec.num_junctions
    word = fmt.total_bits
    junctions = []
    for i, j in enumerate(spec.junctions, start=1):
        junctions.append(
            JunctionResources(
                junction=i,
                z=j.z,
                d_in=j.d_in,
                block_length=j.block_length,
                ff_multipliers=j.z,
                bp_multipliers=2 * j.z if i >= 2 else 0,
                up_multipliers=j.z,
                up_adders=j.z + j.neurons_per_clock,
                bp_partial_sums=j.z if i >= 2 else 0,
                sigmoid_luts=j.neurons_per_clock,
                tree=TreeAdders(junction=i, count=j.neurons_per_clock, depth=int(math.log2(j.d_in))),
            )
        )
    model = MemoryBankModel.for_network(spec)
    depths = model.queue_depths
    memory_bits = {
        "weights_biases": sum(j.weights + j.n_right for j in spec.junctions) * word,
        "activations": sum(depths[l] * spec.layer_sizes[l] for l in range(L)) * word,
        "activation_derivatives": sum(depths[l] * spec.layer_sizes[l] for l in range(1, L)) * word,
        "deltas": 2 * sum(spec.layer_sizes[1:]) * word,
        "ground_truth": epoch_size * n_classes,
    }
    provisioned = model.bits_by_kind(word)
    provisioned["ground_truth"] = memory_bits["ground_truth"]
    clocks = max(block_cycle_clocks(j) for j in spec.junctions)
    seconds = clocks / spec.clock_freq_hz
    ff = sum(r.ff_multipliers for r in junctions)
    bp = sum(r.bp_multipliers for r in junctions)
    return ResourceEstimate(
        network=spec.describe(),
        format=str(fmt),
        ff_multipliers=ff,
        bp_multipliers=bp,
        up_multipliers=sum(r.up_multipliers for r in junctions),
        dsp_mapped_multipliers=ff + bp,
        ff_tree_adders=[r.tree for r in junctions],
        bp_partial_sums=sum(r.bp_partial_sums for r in junctions),
        up_adders=sum(r.up_adders for r in junctions),
        sigmoid_lut_count=sum(r.sigmoid_luts for r in junctions),
        memory_bits=memory_bits,
        provisioned_memory_bits=provisioned,
        total_memory_bits=sum(memory_bits.values()),
        weight_memory_banks=sum(j.z for j in spec.junctions),
        weight_memory_depth=max(model.memory(MemoryKind.WEIGHT, i).words_per_bank for i in range(1, L + 1)),
        block_cycle_clocks=clocks,
        clock_freq_hz=spec.clock_freq_hz,
        block_cycle_seconds=seconds,
        throughput_samples_per_s=spec.clock_freq_hz / clocks,
        gops=_ops_per_sample(spec) / seconds / 1e9,
        junctions=junctions,
    )


def fit_check(
    est: ResourceEstimate,
    dev: DeviceProfile = BASELINE_DEVICE,
    dsp_policy: Union[str, DspPolicy] = DspPolicy.FF_BP,
    epoch_size: int = 12544,
) -> FitReport:
    """Compare an estimate against a device; problems become warnings."""
    policy = DspPolicy(dsp_policy)
    dsp = est.multipliers(policy)
    input_bits = epoch_size * PIXELS_PER_IMAGE * PIXEL_BITS
    warnings = []
    if dsp > dev.dsp_count:
        warnings.append(f"over capacity: {dsp} DSP-mapped multipliers exceed {dev.dsp_count} DSP blocks")
    if est.total_memory_bits > dev.bram_bits:
        warnings.append(
            f"over capacity: {est.total_memory_bits} memory bits exceed {dev.bram_bits} BRAM bits"
        )
    stream = input_bits + est.total_memory_bits > dev.bram_bits
    if stream:
        warnings.append(
            f"must stream inputs: {input_bits / 1e6:.2f} Mb of input data does not fit in "
            f"{dev.bram_kbits:g} kbit of BRAM"
        )
    fits = dsp <= dev.dsp_count and est.total_memory_bits <= dev.bram_bits
    for w in warnings:
        logger.warning(w)
    return FitReport(
        device=dev.name,
        dsp_policy=policy,
        dsp_required=dsp,
        dsp_available=dev.dsp_count,
        memory_bits_required=est.total_memory_bits,
        memory_bits_available=dev.bram_bits,
        input_data_bits=input_bits,
        must_stream_inputs=stream,
        fits=fits,
        warnings=warnings,
    )


def default_z_candidates(spec: NetworkSpec) -> List[Tuple[int, ...]]:
    """z_i = d_in_i, then the configured z halved and doubled while legal."""
    z = spec.z_values
    candidates = [spec.in_degrees]
    down = z
    while all(zi // 2 >= j.d_in for zi, j in zip(down, spec.junctions)):
        down = tuple(zi // 2 for zi in down)
        candidates.append(down)
    up = z
    candidates.append(up)
    while all(zi * 2 <= j.weights for zi, j in zip(up, spec.junctions)):
        up = tuple(zi * 2 for zi in up)
        candidates.append(up)
    seen, ordered = set(), []
    for c in sorted(candidates, key=sum):
        if c not in seen:
            seen.add(c)
            ordered.append(tuple(c))
    return ordered


def sweep_z(
    spec: NetworkSpec,
    candidates: Optional[Sequence[Sequence[int]]] = None,
    fmt: Optional[FixedFormat] = None,
) -> pd.DataFrame:
    fmt = fmt or FixedFormat(12, 3, 8)
    rows = []
    for z in candidates if candidates is not None else default_z_candidates(spec):
        z = tuple(int(v) for v in z)
        row: Dict[str, object] = {"z": "/".join(map(str, z)), "z_total": sum(z)}
        try:
            est = estimate(with_z(spec, z), fmt)
        except TopologyError as e:
            logger.info(f"Skipping z={z}: {e}")
            row.update(valid=False, note=str(e))
            rows.append(row)
            continue
        row.update(
            block_cycle_clocks=est.block_cycle_clocks,
            block_cycle_us=est.block_cycle_seconds * 1e6,
            throughput_samples_per_s=est.throughput_samples_per_s,
            ff_multipliers=est.ff_multipliers,
            bp_multipliers=est.bp_multipliers,
            up_multipliers=est.up_multipliers,
            dsp_mapped=est.dsp_mapped_multipliers,
            weight_banks=est.weight_memory_banks,
            weight_depth=est.weight_memory_depth,
            memory_bits=est.total_memory_bits,
            gops=est.gops,
            valid=True,
            note="",
        )
        rows.append(row)
    columns = [
        "z",
        "z_total",
        "block_cycle_clocks",
        "block_cycle_us",
        "throughput_samples_per_s",
        "ff_multipliers",
        "bp_multipliers",
        "up_multipliers",
        "dsp_mapped",
        "weight_banks",
        "weight_depth",
        "memory_bits",
        "gops",
        "valid",
        "note",
    ]
    return pd.DataFrame(rows, columns=columns)


def render_estimate_table(est: ResourceEstimate, fit: Optional[FitReport] = None) -> Table:
    table = Table(title=f"Resources for {est.network.get('layer_sizes')} at {est.format}")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("FF multipliers", str(est.ff_multipliers))
    table.add_row("BP multipliers", str(est.bp_multipliers))
    table.add_row("UP multipliers", str(est.up_multipliers))
    table.add_row("DSP-mapped (FF+BP)", str(est.dsp_mapped_multipliers))
    trees = ", ".join(f"J{t.junction}: {t.count} x depth {t.depth}" for t in est.ff_tree_adders)
    table.add_row("FF adder trees", trees)
    table.add_row("BP partial sums", str(est.bp_partial_sums))
    table.add_row("UP adders", str(est.up_adders))
    table.add_row("Sigmoid LUTs", str(est.sigmoid_lut_count))
    for kind, bits in est.memory_bits.items():
        table.add_row(f"Memory: {kind}", f"{bits:,} bits")
    table.add_row("Block cycle", f"{est.block_cycle_clocks} clocks = {est.block_cycle_seconds * 1e6:.4f} us")
    table.add_row("Throughput", f"{est.throughput_samples_per_s:,.0f} samples/s")
    table.add_row("GOPS", f"{est.gops:.3f}")
    if fit is not None:
        table.add_row("Fit", fit.summary, style="green" if fit.fits else "red")
        for w in fit.warnings:
            table.add_row("Warning", w, style="yellow")
    return table
