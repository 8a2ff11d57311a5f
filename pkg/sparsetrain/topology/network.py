"""Pre-defined sparse network structure.

Junction i connects layer i-1 (left, N_{i-1} neurons) to layer i (right, N_i
neurons). Every left neuron has exactly d_out edges and every right neuron
exactly d_in, so N_{i-1}*d_out = N_i*d_in = W_i. A junction processes z_i
weights per clock.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import yaml

from ..common.errors import TopologyError

logger = logging.getLogger(__name__)

DEFAULT_CLOCK_HZ = 15_000_000.0


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class JunctionSpec:
    """Connectivity and parallelism of one junction."""

    n_left: int
    n_right: int
    d_out: int
    d_in: int
    z: int

    @classmethod
    def from_degrees(cls, n_left: int, n_right: int, d_out: int, z: int) -> "JunctionSpec":
        if n_right <= 0 or (n_left * d_out) % n_right:
            raise TopologyError(
                "weight_balance",
                f"N_left*d_out = {n_left * d_out} is not a multiple of N_right = {n_right}",
            )
        return cls(n_left, n_right, d_out, n_left * d_out // n_right, z)

    @property
    def weights(self) -> int:
        return self.n_left * self.d_out

    @property
    def density(self) -> float:
        return self.weights / (self.n_left * self.n_right)

    @property
    def block_length(self) -> int:
        """Clocks to sweep every weight once, W/z (no pipeline overhead)."""
        return self.weights // self.z

    @property
    def neurons_per_clock(self) -> int:
        return self.z // self.d_in

    @property
    def is_fully_connected(self) -> bool:
        return self.d_out == self.n_right and self.d_in == self.n_left

    def validate(self, require_power_of_two: bool = True) -> None:
        fields = (self.n_left, self.n_right, self.d_out, self.d_in, self.z)
        if min(fields) < 1:
            raise TopologyError("positive", f"all counts must be >= 1, got {fields}")
        if self.n_left * self.d_out != self.n_right * self.d_in:
            raise TopologyError(
                "weight_balance",
                f"N_left*d_out = {self.n_left * self.d_out} != N_right*d_in = {self.n_right * self.d_in}",
            )
        if self.d_out > self.n_right or self.d_in > self.n_left:
            raise TopologyError(
                "degree_bounds",
                f"d_out={self.d_out} must be <= N_right={self.n_right} and "
                f"d_in={self.d_in} <= N_left={self.n_left}",
            )
        if require_power_of_two:
            names = ("n_left", "n_right", "d_out", "d_in", "z")
            bad = [f"{n}={v}" for n, v in zip(names, fields) if not is_power_of_two(v)]
            if bad:
                raise TopologyError("power_of_two", f"not a power of two: {', '.join(bad)}")
        if self.z < self.d_in or self.z % self.d_in:
            raise TopologyError(
                "z_covers_fan_in", f"z={self.z} must be a multiple of d_in={self.d_in}"
            )
        if self.weights % self.z:
            raise TopologyError("z_divides_w", f"z={self.z} does not divide W={self.weights}")


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes, per-junction connectivity and the clock rate."""

    layer_sizes: Tuple[int, ...]
    junctions: Tuple[JunctionSpec, ...]
    clock_freq_hz: float = DEFAULT_CLOCK_HZ

    @classmethod
    def from_degrees(
        cls,
        layer_sizes: Sequence[int],
        d_out: Sequence[int],
        z: Sequence[int],
        clock_freq_hz: float = DEFAULT_CLOCK_HZ,
    ) -> "NetworkSpec":
        sizes = tuple(int(n) for n in layer_sizes)
        if len(d_out) != len(sizes) - 1 or len(z) != len(sizes) - 1:
            raise TopologyError(
                "layer_count",
                f"{len(sizes)} layers need {len(sizes) - 1} d_out and z entries, "
                f"got {len(d_out)} and {len(z)}",
            )
        junctions = tuple(
            JunctionSpec.from_degrees(sizes[i], sizes[i + 1], int(d_out[i]), int(z[i]))
            for i in range(len(sizes) - 1)
        )
        return cls(sizes, junctions, float(clock_freq_hz))

    @property
    def num_junctions(self) -> int:
        return len(self.junctions)

    def junction(self, i: int) -> JunctionSpec:
        """Junction by its 1-based index."""
        if not 1 <= i <= self.num_junctions:
            raise TopologyError("junction_index", f"junction {i} outside [1, {self.num_junctions}]")
        return self.junctions[i - 1]

    @property
    def weight_counts(self) -> Tuple[int, ...]:
        return tuple(j.weights for j in self.junctions)

    @property
    def in_degrees(self) -> Tuple[int, ...]:
        return tuple(j.d_in for j in self.junctions)

    @property
    def out_degrees(self) -> Tuple[int, ...]:
        return tuple(j.d_out for j in self.junctions)

    @property
    def z_values(self) -> Tuple[int, ...]:
        return tuple(j.z for j in self.junctions)

    @property
    def densities(self) -> Tuple[float, ...]:
        return tuple(j.density for j in self.junctions)

    @property
    def overall_density(self) -> float:
        dense = sum(j.n_left * j.n_right for j in self.junctions)
        return sum(self.weight_counts) / dense

    @property
    def param_count(self) -> int:
        return sum(self.weight_counts) + sum(self.layer_sizes[1:])

    @property
    def block_length(self) -> int:
        """Common W/z of all junctions (the largest if they differ)."""
        return max(j.block_length for j in self.junctions)

    def describe(self) -> Dict[str, Any]:
        return {
            "layer_sizes": list(self.layer_sizes),
            "d_out": list(self.out_degrees),
            "d_in": list(self.in_degrees),
            "z": list(self.z_values),
            "weights": list(self.weight_counts),
            "densities": [round(d, 6) for d in self.densities],
            "overall_density": round(self.overall_density, 6),
            "param_count": self.param_count,
            "block_length": self.block_length,
            "clock_freq_hz": self.clock_freq_hz,
        }


def build_network(
    spec: NetworkSpec,
    require_power_of_two: bool = True,
    equal_block_cycles: bool = True,
) -> NetworkSpec:
    """Validate every structural invariant and return the spec.

    Derived quantities (W_i, d_in_i, densities, parameter count) are exposed as
    properties of the returned spec.
    """
    if len(spec.layer_sizes) < 2 or len(spec.junctions) != len(spec.layer_sizes) - 1:
        raise TopologyError(
            "layer_count",
            f"{len(spec.layer_sizes)} layers but {len(spec.junctions)} junctions",
        )
    for i, j in enumerate(spec.junctions, start=1):
        if (j.n_left, j.n_right) != (spec.layer_sizes[i - 1], spec.layer_sizes[i]):
            raise TopologyError(
                "layer_sizes",
                f"junction {i} is {j.n_left}->{j.n_right} but layers are "
                f"{spec.layer_sizes[i - 1]}->{spec.layer_sizes[i]}",
            )
        try:
            j.validate(require_power_of_two)
        except TopologyError as e:
            raise TopologyError(e.invariant, f"junction {i}: {e}") from None
    if equal_block_cycles:
        lengths = {j.block_length for j in spec.junctions}
        if len(lengths) > 1:
            raise TopologyError(
                "equal_block_cycle",
                f"W_i/z_i differ across junctions: {[j.block_length for j in spec.junctions]}",
            )
    if spec.clock_freq_hz <= 0:
        raise TopologyError("clock_freq", f"clock frequency must be positive, got {spec.clock_freq_hz}")
    logger.debug(f"Validated network {spec.describe()}")
    return spec


def fully_connected_counterpart(spec: NetworkSpec) -> NetworkSpec:
    """Same layers with every junction fully connected (z = d_in = N_{i-1})."""
    sizes = spec.layer_sizes
    return NetworkSpec.from_degrees(
        sizes,
        d_out=sizes[1:],
        z=sizes[:-1],
        clock_freq_hz=spec.clock_freq_hz,
    )


def with_z(spec: NetworkSpec, z: Sequence[int]) -> NetworkSpec:
    if len(z) != spec.num_junctions:
        raise TopologyError("layer_count", f"expected {spec.num_junctions} z values, got {len(z)}")
    junctions = tuple(replace(j, z=int(zi)) for j, zi in zip(spec.junctions, z))
    return replace(spec, junctions=junctions)


def with_junction_density(spec: NetworkSpec, junction: int, density: float) -> NetworkSpec:
    """Change one junction's density, rescaling its z to keep the block cycle."""
    old = spec.junction(junction)
    d_out = density * old.n_right
    if abs(d_out - round(d_out)) > 1e-9 or round(d_out) < 1:
        raise TopologyError(
            "density", f"density {density} of N_right={old.n_right} is not a whole out-degree"
        )
    block = old.block_length
    new = JunctionSpec.from_degrees(old.n_left, old.n_right, int(round(d_out)), old.z)
    if new.weights % block:
        raise TopologyError(
            "equal_block_cycle", f"W={new.weights} cannot keep block length {block}"
        )
    new = replace(new, z=new.weights // block)
    junctions = list(spec.junctions)
    junctions[junction - 1] = new
    return replace(spec, junctions=tuple(junctions))


def network_spec_from_dict(data: Dict[str, Any]) -> NetworkSpec:
    try:
        return NetworkSpec.from_degrees(
            data["layer_sizes"],
            data["d_out"],
            data["z"],
            float(data.get("clock_freq_hz", DEFAULT_CLOCK_HZ)),
        )
    except KeyError as e:
        raise TopologyError("missing_field", f"network section lacks {e}") from None


def load_network_spec(path: str | Path) -> NetworkSpec:
    """Read the ``network:`` section (or a bare network mapping) from YAML."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return network_spec_from_dict(data.get("network", data))


BASELINE_NETWORK = NetworkSpec.from_degrees((1024, 64, 32), d_out=(4, 16), z=(128, 32))
