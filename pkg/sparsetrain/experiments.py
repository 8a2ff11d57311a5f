"""Run orchestration: one method per CLI command, writing artifacts under an output directory."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .common.errors import ConfigError, SparseTrainError
from .common.logging_utils import log_run_message
from .config import RunConfig
from .data import Dataset, encode_dataset, load_idx
from .engine import (
    ActivationId,
    TrainResult,
    build_activation_table,
    clip_statistics,
    evaluate,
    train,
)
from .fixedpoint import FixedFormat, Rounding
from .models import ClipStatsReport, RunSummary, ViolationReport
from .pipeline import simulate_trace
from .resources import FitReport, ResourceEstimate, estimate, fit_check, sweep_z
from .topology import build_interleavers, export_interleaver_csv, with_junction_density

logger = logging.getLogger(__name__)

SWEEP_AXES = ("bits", "density", "z", "seed")


@dataclass
class SweepRun:
    label: str
    config: RunConfig
    row: Dict[str, Any]


def _write_json(path: Path, model) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    return path


class ExperimentRunner:
    """Coordinates the experiments of one configuration."""

    def __init__(self, cfg: RunConfig, out_dir: Optional[str | Path] = None) -> None:
        self.config = cfg
        self.out_dir = Path(out_dir or cfg.output.dir)
        self._dataset: Optional[Dataset] = None

    def dataset(self) -> Dataset:
        if self._dataset is None:
            images, labels = self.config.data.train_paths()
            self._dataset = load_idx(images, labels)
        return self._dataset

    def _test_accuracy(self, cfg: RunConfig, result: TrainResult) -> Optional[float]:
        if not cfg.data.evaluate_test:
            return None
        images_path, labels_path = cfg.data.test_paths()
        test = load_idx(images_path, labels_path)
        sizes = result.net.spec.layer_sizes
        inputs, _, labels = encode_dataset(test, len(test), n_inputs=sizes[0], n_outputs=sizes[-1])
        return evaluate(result.params, result.net, inputs, labels)

    # training -----------------------------------------------------------

    def train(self, cfg: Optional[RunConfig] = None, out_dir: Optional[Path] = None) -> RunSummary:
        """Train once; writes metrics.csv, summary.json and params.npz."""
        cfg = cfg or self.config
        out_dir = Path(out_dir or self.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        train_config = cfg.train_config()
        dataset = self.dataset() if train_config.epochs > 0 else _empty_dataset()
        log_run_message(f"train -> {out_dir} ({train_config.describe()})")
        result = train(train_config, cfg.network_spec(), dataset)

        result.metrics.to_csv(out_dir / "metrics.csv", index=False)
        result.params.save_npz(out_dir / "params.npz", result.net.backend)
        described = train_config.describe()
        summary = RunSummary(
            network=result.net.spec.describe(),
            format=described["format"],
            backend=described["backend"],
            activation=described["activation"],
            cost=described["cost"],
            update_semantics=described["update_semantics"],
            epochs=train_config.epochs,
            epoch_size=train_config.epoch_size,
            init_seed=train_config.init_seed,
            interleaver_seed=train_config.interleaver_seed,
            final_accuracy=result.final_accuracy,
            epoch_summaries=result.epochs,
            clip_count=result.clip_count,
            test_accuracy=self._test_accuracy(cfg, result) if train_config.epochs > 0 else None,
            wall_time_s=result.wall_time_s,
        )
        _write_json(out_dir / "summary.json", summary)
        log_run_message(f"train finished: accuracy {summary.final_accuracy}, {summary.wall_time_s:.1f}s")
        return summary

    # sweeps -------------------------------------------------------------

    def _bits_runs(self, values: Sequence[Any], rounding_modes: Sequence[str]) -> List[SweepRun]:
        runs = []
        for bits in values:
            for mode in rounding_modes:
                label = f"bits_{'-'.join(map(str, bits))}_{mode}"
                row: Dict[str, Any] = {"bits": f"({','.join(map(str, bits))})", "rounding": mode}
                cfg = replace(
                    self.config,
                    format=replace(self.config.format, bits=list(bits), rounding=mode),
                    training=replace(self.config.training, backend="fixed", progress=False),
                )
                runs.append(SweepRun(label, cfg, row))
        return runs

    def _density_runs(self, values: Sequence[float]) -> List[SweepRun]:
        junction = self.config.sweep.density_junction
        runs = []
        for density in values:
            spec = with_junction_density(self.config.network_spec(), junction, float(density))
            cfg = self.config.with_network(spec)
            cfg = replace(cfg, training=replace(cfg.training, progress=False))
            row = {
                "junction": junction,
                "density": float(density),
                "densities": "/".join(f"{d:.4f}" for d in spec.densities),
                "overall_density": spec.overall_density,
            }
            runs.append(SweepRun(f"density_{density:g}", cfg, row))
        return runs

    def _seed_runs(self, values: Sequence[int]) -> List[SweepRun]:
        runs = []
        for seed in values:
            cfg = replace(
                self.config,
                network=replace(self.config.network, interleaver_seed=int(seed)),
                training=replace(self.config.training, init_seed=int(seed), progress=False),
            )
            runs.append(SweepRun(f"seed_{seed}", cfg, {"seed": int(seed)}))
        return runs

    def _run_one(self, run: SweepRun, out_dir: Path) -> Dict[str, Any]:
        row = dict(run.row)
        try:
            run.config.validate()
            summary = self.train(run.config, out_dir / run.label)
        except SparseTrainError as e:
            logger.warning(f"Skipping {run.label}: {e}")
            row.update(valid=False, note=str(e))
            return row
        epochs = summary.epoch_summaries
        row.update(
            {
                "acc_epoch_1": epochs[0].rolling_accuracy if epochs else None,
                f"acc_epoch_{len(epochs)}": epochs[-1].rolling_accuracy if epochs else None,
                "clip_count": summary.clip_count,
                "wall_time_s": summary.wall_time_s,
                "valid": True,
                "note": "",
            }
        )
        return row

    def sweep(
        self,
        axis: str,
        values: Optional[Sequence[Any]] = None,
        rounding: str = "config",
        threads: Optional[int] = None,
    ) -> pd.DataFrame:
        """One run (or estimate, for ``z``) per value, aggregated into sweep_<axis>.csv."""
        if axis not in SWEEP_AXES:
            raise ConfigError("sweep.axis", f"expected one of {SWEEP_AXES}, got '{axis}'")
        out_dir = self.out_dir / f"sweep_{axis}"
        out_dir.mkdir(parents=True, exist_ok=True)
        sweep = self.config.sweep
        if axis == "z":
            frame = sweep_z(self.config.network_spec(), values or sweep.z, self.config.fixed_format())
        else:
            runs = self._plan(axis, values, rounding)
            workers = threads or sweep.threads
            if any(run.config.training.epochs > 0 for run in runs):
                self.dataset()
            log_run_message(f"sweep {axis}: {len(runs)} runs on {workers} thread(s)")
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(self._run_one, run, out_dir) for run in runs]
                rows = [f.result() for f in tqdm(futures, desc=f"sweep {axis}", disable=not self.config.training.progress)]
            frame = pd.DataFrame(rows)
        frame.to_csv(out_dir / f"sweep_{axis}.csv", index=False)
        return frame

    def _plan(self, axis: str, values: Optional[Sequence[Any]], rounding: str) -> List[SweepRun]:
        sweep = self.config.sweep
        if axis == "bits":
            if rounding == "both":
                modes = [m.value for m in Rounding]
            elif rounding == "config":
                modes = [self.config.format.rounding]
            else:
                modes = [Rounding.parse(rounding).value]
            return self._bits_runs(values or sweep.bits, modes)
        if axis == "density":
            return self._density_runs(values or sweep.densities)
        return self._seed_runs(values or sweep.seeds)

    # hardware model -----------------------------------------------------

    def trace(self, block_cycles: Optional[int] = None, export: bool = True) -> ViolationReport:
        cfg = self.config
        spec = cfg.network_spec()
        interleavers = build_interleavers(spec, cfg.network.interleaver_seed)
        n = cfg.trace.block_cycles if block_cycles is None else block_cycles
        result = simulate_trace(
            spec, interleavers, n, cfg.trace.queue_depths, keep_block_cycles=cfg.trace.export_block_cycles
        )
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if export:
            result.trace.export_csv(self.out_dir / "trace.csv")
        _write_json(self.out_dir / "trace_report.json", result.report)
        return result.report

    def estimate(self) -> Tuple[ResourceEstimate, FitReport]:
        cfg = self.config
        est = estimate(cfg.network_spec(), cfg.fixed_format(), cfg.training.epoch_size)
        fit = fit_check(est, cfg.device_profile(), cfg.device.dsp_policy, cfg.training.epoch_size)
        _write_json(self.out_dir / "estimate.json", est)
        _write_json(self.out_dir / "fit.json", fit)
        return est, fit

    def clipstats(self, which: Sequence[str] = ("sparse", "fc")) -> Dict[str, ClipStatsReport]:
        cfg = self.config
        train_config = replace(cfg.train_config(), epochs=cfg.clipstats.epochs)
        reports: Dict[str, ClipStatsReport] = {}
        rows = []
        for kind in which:
            report = clip_statistics(
                cfg.network_spec(), self.dataset(), train_config, kind, cfg.clipstats.window, bins=cfg.clipstats.bins
            )
            reports[kind] = report
            _write_json(self.out_dir / f"clipstats_{kind}.json", report)
            for lo, hi, count in zip(report.bin_edges[:-1], report.bin_edges[1:], report.histogram):
                rows.append({"which": kind, "bin_low": lo, "bin_high": hi, "count": count})
        pd.DataFrame(rows).to_csv(self.out_dir / "clipstats_histogram.csv", index=False)
        return reports

    def lut_dump(self, activation: str = "sigmoid", fmt: Optional[FixedFormat] = None) -> Path:
        fmt = fmt or self.config.fixed_format()
        table = build_activation_table(ActivationId.parse(activation), fmt)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"lut_{table.activation.value}_{fmt.total_bits}_{fmt.integer_bits}_{fmt.fraction_bits}.csv"
        table.to_frame().to_csv(path, index=False)
        return path

    def export_interleavers(self) -> List[Path]:
        spec = self.config.network_spec()
        paths = []
        for i, ilv in enumerate(build_interleavers(spec, self.config.network.interleaver_seed), start=1):
            paths.append(export_interleaver_csv(ilv, self.out_dir / f"interleaver_j{i}.csv"))
        return paths


def _empty_dataset() -> Dataset:
    return Dataset(np.zeros((0, 784), dtype=np.uint8), np.zeros(0, dtype=np.uint8))
