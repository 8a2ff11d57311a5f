import json

import numpy as np
import pandas as pd
import pytest

from sparsetrain.common.errors import ConfigError
from sparsetrain.config import RunConfig
from sparsetrain.data import encode_dataset
from sparsetrain.engine import FloatBackend, ParamStore, compile_network, evaluate
from sparsetrain.experiments import ExperimentRunner


def _runner(overrides, extra=()):
    return ExperimentRunner(RunConfig.load(overrides=list(overrides) + list(extra)))


def test_train_writes_artifacts(tiny_overrides):
    runner = _runner(tiny_overrides)
    summary = runner.train()
    out = runner.out_dir
    metrics = pd.read_csv(out / "metrics.csv")
    assert len(metrics) == 4
    saved = json.loads((out / "summary.json").read_text())
    assert saved["epochs"] == 1
    assert saved["format"].startswith("(12,3,8)")
    assert saved["final_accuracy"] == summary.final_accuracy
    assert (out / "params.npz").exists()


def test_train_with_test_set(tiny_overrides, tiny_dataset):
    runner = _runner(tiny_overrides, ["data.evaluate_test=true", "training.backend=float"])
    summary = runner.train()
    cfg = runner.config
    spec = cfg.network_spec()
    saved = np.load(runner.out_dir / "params.npz")
    n = spec.num_junctions
    params = ParamStore([saved[f"w{i}"] for i in range(1, n + 1)], [saved[f"b{i}"] for i in range(1, n + 1)])
    net = compile_network(spec, FloatBackend(), cfg.network.interleaver_seed)
    inputs, _, labels = encode_dataset(tiny_dataset, len(tiny_dataset), n_inputs=16, n_outputs=16)
    assert summary.test_accuracy == pytest.approx(evaluate(params, net, inputs, labels))


def test_zero_epochs_need_no_dataset(tiny_overrides, tmp_path):
    runner = _runner(tiny_overrides, ["training.epochs=0", f"data.dir={tmp_path / 'nowhere'}"])
    summary = runner.train()
    assert summary.final_accuracy is None
    assert pd.read_csv(runner.out_dir / "metrics.csv").empty


def test_missing_dataset(tiny_overrides, tmp_path):
    runner = _runner(tiny_overrides, [f"data.dir={tmp_path / 'nowhere'}"])
    with pytest.raises(ConfigError, match="dataset not found"):
        runner.train()


def test_bits_sweep(tiny_overrides):
    runner = _runner(tiny_overrides)
    frame = runner.sweep("bits", [[8, 2, 5], [12, 3, 8]], rounding="both", threads=2)
    assert len(frame) == 4
    assert set(frame["rounding"]) == {"truncate", "round-nearest-even"}
    assert frame["valid"].all()
    assert (runner.out_dir / "sweep_bits" / "sweep_bits.csv").exists()


def test_bits_sweep_skips_invalid_formats(tiny_overrides):
    frame = _runner(tiny_overrides).sweep("bits", [[12, 3, 7], [12, 3, 8]])
    assert frame["valid"].tolist() == [False, True]


def test_density_sweep(tiny_overrides):
    frame = _runner(tiny_overrides).sweep("density", [0.125, 0.25, 0.5])
    assert frame["density"].tolist() == [0.125, 0.25, 0.5]
    assert frame["valid"].all()
    assert frame["overall_density"].is_monotonic_increasing


def test_seed_sweep(tiny_overrides):
    frame = _runner(tiny_overrides).sweep("seed", [0, 1])
    assert frame["seed"].tolist() == [0, 1]


def test_z_sweep(tiny_overrides):
    frame = _runner(tiny_overrides).sweep("z", [[4, 8], [8, 16]])
    assert frame["block_cycle_clocks"].tolist() == [10, 6]


def test_unknown_sweep_axis(tiny_overrides):
    with pytest.raises(ConfigError):
        _runner(tiny_overrides).sweep("momentum")


def test_trace_and_estimate(tiny_overrides):
    runner = _runner(tiny_overrides)
    report = runner.trace()
    assert report.clean
    assert (runner.out_dir / "trace.csv").exists()
    est, fit = runner.estimate()
    assert est.block_cycle_clocks == 10
    assert fit.fits
    assert (runner.out_dir / "fit.json").exists()


def test_clipstats_and_lut_dump(tiny_overrides):
    runner = _runner(tiny_overrides)
    reports = runner.clipstats(["sparse", "fc"])
    assert set(reports) == {"sparse", "fc"}
    histogram = pd.read_csv(runner.out_dir / "clipstats_histogram.csv")
    assert set(histogram["which"]) == {"sparse", "fc"}
    path = runner.lut_dump("sigmoid")
    lut = pd.read_csv(path)
    assert lut[lut["input_raw"] == 0]["value"].iloc[0] == 0.5


def test_export_interleavers(tiny_overrides):
    paths = _runner(tiny_overrides).export_interleavers()
    assert [p.name for p in paths] == ["interleaver_j1.csv", "interleaver_j2.csv"]
