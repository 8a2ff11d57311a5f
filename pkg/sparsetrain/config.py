from __future__ import annotations

import copy
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import yaml
from dotenv import load_dotenv

from .common.errors import ConfigError, SparseTrainError
from .engine import DEFAULT_LR_SCHEDULE, TrainConfig, parse_lr_schedule
from .fixedpoint import FixedFormat
from .resources import BASELINE_DEVICE, DeviceProfile, DspPolicy, load_device_profile
from .topology import NetworkSpec, build_network, network_spec_from_dict

load_dotenv()


def _load_file(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}


@dataclass
class NetworkSection:
    """Layer sizes, out-degrees and per-junction parallelism."""

    layer_sizes: List[int] = field(default_factory=lambda: [1024, 64, 32])
    d_out: List[int] = field(default_factory=lambda: [4, 16])
    z: List[int] = field(default_factory=lambda: [128, 32])
    clock_freq_hz: float = 15_000_000.0
    interleaver_seed: int = 0

    def to_spec(self) -> NetworkSpec:
        return network_spec_from_dict(asdict(self))


@dataclass
class FormatSection:
    bits: List[int] = field(default_factory=lambda: [12, 3, 8])
    rounding: str = "truncate"

    def to_format(self) -> FixedFormat:
        return FixedFormat.from_triplet(self.bits, self.rounding)


@dataclass
class TrainingSection:
    epochs: int = 15
    epoch_size: int = 12544
    lr_schedule: List[List[Optional[int]]] = field(
        default_factory=lambda: [[s.first_epoch, s.last_epoch, s.exponent] for s in DEFAULT_LR_SCHEDULE]
    )
    cost: str = "cross-entropy"
    activation: str = "sigmoid"
    backend: str = "fixed"
    init_seed: int = 0
    update_semantics: str = "sequential"
    bp_scaling: str = "post_sum"
    repeated_init: bool = True
    zero_bias_init: bool = False
    rolling_window: int = 1000
    log_every: int = 1000
    progress: bool = True


@dataclass
class DataSection:
    """MNIST IDX files; relative paths resolve against SPARSETRAIN_DATA_DIR when set."""

    dir: str = "data/mnist"
    train_images: str = "train-images-idx3-ubyte"
    train_labels: str = "train-labels-idx1-ubyte"
    test_images: str = "t10k-images-idx3-ubyte"
    test_labels: str = "t10k-labels-idx1-ubyte"
    evaluate_test: bool = False

    def _resolve(self, name: str, key: str) -> Path:
        path = Path(name)
        if not path.is_absolute():
            path = Path(os.getenv("SPARSETRAIN_DATA_DIR", self.dir)) / path
        if path.exists():
            return path
        gz = path.with_name(path.name + ".gz")
        if gz.exists():
            return gz
        raise ConfigError(f"data.{key}", f"dataset not found: {path}")

    def train_paths(self) -> tuple[Path, Path]:
        return self._resolve(self.train_images, "train_images"), self._resolve(self.train_labels, "train_labels")

    def test_paths(self) -> tuple[Path, Path]:
        return self._resolve(self.test_images, "test_images"), self._resolve(self.test_labels, "test_labels")


@dataclass
class OutputSection:
    dir: str = field(default_factory=lambda: os.getenv("SPARSETRAIN_OUT_DIR", "runs"))


@dataclass
class DeviceSection:
    """Target device; ``profile`` (a YAML path) takes precedence over the inline values."""

    profile: Optional[str] = None
    name: str = BASELINE_DEVICE.name
    dsp_count: int = BASELINE_DEVICE.dsp_count
    bram_kbits: float = BASELINE_DEVICE.bram_kbits
    dsp_policy: str = "ff+bp"

    def to_profile(self) -> DeviceProfile:
        if self.profile:
            return load_device_profile(self.profile)
        return DeviceProfile(name=self.name, dsp_count=self.dsp_count, bram_kbits=self.bram_kbits)


@dataclass
class ClipStatsSection:
    epochs: int = 1
    window: int = 1000
    bins: int = 64


@dataclass
class TraceSection:
    block_cycles: int = 1000
    export_block_cycles: int = 4
    queue_depths: Optional[List[int]] = None


@dataclass
class SweepSection:
    bits: List[List[int]] = field(
        default_factory=lambda: [[8, 2, 5], [10, 2, 7], [10, 3, 6], [12, 3, 8], [16, 4, 11]]
    )
    density_junction: int = 2
    densities: List[float] = field(default_factory=lambda: [0.125, 0.25, 0.5])
    z: Optional[List[List[int]]] = None
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3])
    threads: int = 1


_SECTIONS = {
    "network": NetworkSection,
    "format": FormatSection,
    "training": TrainingSection,
    "data": DataSection,
    "output": OutputSection,
    "device": DeviceSection,
    "clipstats": ClipStatsSection,
    "trace": TraceSection,
    "sweep": SweepSection,
}


def _section(name: str, data: Any):
    cls = _SECTIONS[name]
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(name, "section must be a mapping")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return cls(**data)


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Apply ``section.key=value`` strings; values are parsed as YAML scalars or lists."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        if len(parts) != 2 or parts[0] not in _SECTIONS:
            raise ConfigError(key, "override key must be section.key with a known section")
        section, name = parts
        if name not in {f.name for f in fields(_SECTIONS[section])}:
            raise ConfigError(key, "unknown key")
        data.setdefault(section, {})
        if data[section] is None:
            data[section] = {}
        data[section][name] = yaml.safe_load(raw)
    return data


@dataclass
class RunConfig:
    """Complete configuration of a command."""

    network: NetworkSection = field(default_factory=NetworkSection)
    format: FormatSection = field(default_factory=FormatSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    data: DataSection = field(default_factory=DataSection)
    output: OutputSection = field(default_factory=OutputSection)
    device: DeviceSection = field(default_factory=DeviceSection)
    clipstats: ClipStatsSection = field(default_factory=ClipStatsSection)
    trace: TraceSection = field(default_factory=TraceSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    source: Optional[str] = None

    @staticmethod
    def from_dict(data: Dict[str, Any], source: Optional[str] = None) -> "RunConfig":
        for name in data:
            if name not in _SECTIONS:
                raise ConfigError(name, "unknown section")
        config = RunConfig(**{name: _section(name, data.get(name)) for name in _SECTIONS}, source=source)
        config.validate()
        return config

    @staticmethod
    def load(path: Optional[str | Path] = None, overrides: Iterable[str] = ()) -> "RunConfig":
        """Load a YAML file (or the built-in defaults when ``path`` is None) plus overrides."""
        data: Dict[str, Any] = {}
        if path is not None:
            if not Path(path).exists():
                raise ConfigError("config", f"config file not found: {path}")
            data = _load_file(path)
        return RunConfig.from_dict(apply_overrides(data, overrides), None if path is None else str(path))

    def to_dict(self) -> Dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def with_network(self, spec: NetworkSpec) -> "RunConfig":
        network = replace(
            self.network,
            layer_sizes=list(spec.layer_sizes),
            d_out=list(spec.out_degrees),
            z=list(spec.z_values),
            clock_freq_hz=spec.clock_freq_hz,
        )
        return replace(self, network=network)

    def validate(self) -> None:
        checks = (
            ("network", self.network_spec),
            ("format", self.fixed_format),
            ("training", self.train_config),
            ("device", self.device_profile),
            ("device.dsp_policy", lambda: DspPolicy(self.device.dsp_policy)),
        )
        for name, check in checks:
            try:
                check()
            except ConfigError:
                raise
            except (SparseTrainError, OSError, ValueError, TypeError) as e:
                raise ConfigError(name, str(e)) from None
        if self.sweep.threads < 1:
            raise ConfigError("sweep.threads", "must be at least 1")
        if self.trace.block_cycles < 0:
            raise ConfigError("trace.block_cycles", "must be non-negative")

    def network_spec(self) -> NetworkSpec:
        return build_network(self.network.to_spec())

    def fixed_format(self) -> FixedFormat:
        return self.format.to_format()

    def train_config(self) -> TrainConfig:
        t = self.training
        return TrainConfig(
            epochs=t.epochs,
            epoch_size=t.epoch_size,
            lr_schedule=parse_lr_schedule(t.lr_schedule),
            cost=t.cost,
            activation=t.activation,
            backend=t.backend,
            fmt=self.fixed_format(),
            init_seed=t.init_seed,
            interleaver_seed=self.network.interleaver_seed,
            update_semantics=t.update_semantics,
            bp_scaling=t.bp_scaling,
            repeated_init=t.repeated_init,
            zero_bias_init=t.zero_bias_init,
            rolling_window=t.rolling_window,
            log_every=t.log_every,
            progress=t.progress,
        )

    def device_profile(self) -> DeviceProfile:
        return self.device.to_profile()
