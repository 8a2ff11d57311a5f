import numpy as np
import pytest

from sparsetrain.common.errors import ConfigError
from sparsetrain.data import synthetic_dataset
from sparsetrain.engine import (
    METRIC_COLUMNS,
    LrStep,
    ParamStore,
    TrainConfig,
    clip_statistics,
    exponent_for,
    parse_lr_schedule,
    train,
)
from sparsetrain.topology import BASELINE_NETWORK


def _config(**kwargs):
    settings = dict(epochs=2, epoch_size=64, rolling_window=32, log_every=16, progress=False)
    settings.update(kwargs)
    return TrainConfig(**settings)


def test_learning_rate_schedule():
    assert [exponent_for(TrainConfig().lr_schedule, e) for e in (1, 2, 3, 6, 7, 10, 11, 14, 15, 40)] == [
        3, 3, 4, 4, 5, 5, 6, 6, 7, 7,
    ]
    steps = parse_lr_schedule([[1, 1, 2], {"first_epoch": 2, "last_epoch": None, "exponent": 5}])
    assert steps == (LrStep(1, 1, 2), LrStep(2, None, 5))
    with pytest.raises(ConfigError):
        parse_lr_schedule([[1, 2]])
    with pytest.raises(ConfigError):
        parse_lr_schedule([[1, None, -1]])


def test_config_rejects_unknown_values():
    with pytest.raises(ConfigError) as err:
        _config(cost="hinge")
    assert err.value.field == "training.cost"
    with pytest.raises(ConfigError):
        _config(update_semantics="async")
    with pytest.raises(ConfigError):
        _config(epochs=3, lr_schedule=(LrStep(1, 2, 3),))


def test_zero_epochs_keep_initial_params(tiny_spec, tiny_dataset):
    result = train(_config(epochs=0), tiny_spec, tiny_dataset)
    assert result.metrics.empty
    assert list(result.metrics.columns) == METRIC_COLUMNS
    assert result.epochs == []
    assert result.final_accuracy is None
    for w0, w1 in zip(result.initial_params.weights, result.params.weights):
        assert np.array_equal(w0, w1)


@pytest.mark.parametrize("semantics", ["sequential", "pipelined-stale"])
def test_training_records_metrics(tiny_spec, tiny_dataset, semantics):
    result = train(_config(update_semantics=semantics), tiny_spec, tiny_dataset)
    assert list(result.metrics.columns) == METRIC_COLUMNS
    assert len(result.metrics) == 8
    assert result.metrics["sample_index"].tolist() == [16, 32, 48, 64] * 2
    assert [e.epoch for e in result.epochs] == [1, 2]
    assert [e.eta_exponent for e in result.epochs] == [3, 3]
    assert 0.0 <= result.final_accuracy <= 100.0
    assert all(e.max_abs_w <= 7.99609375 for e in result.epochs)
    assert result.metrics["clip_count"].is_monotonic_increasing
    changed = [not np.array_equal(a, b) for a, b in zip(result.initial_params.weights, result.params.weights)]
    assert all(changed)


@pytest.mark.parametrize("semantics", ["sequential", "pipelined-stale"])
def test_training_is_deterministic(tiny_spec, tiny_dataset, semantics):
    a = train(_config(update_semantics=semantics), tiny_spec, tiny_dataset)
    b = train(_config(update_semantics=semantics), tiny_spec, tiny_dataset)
    for x, y in zip(a.params.weights + a.params.biases, b.params.weights + b.params.biases):
        assert np.array_equal(x, y)
    assert a.metrics.equals(b.metrics)


def test_stale_updates_change_the_trajectory(tiny_spec, tiny_dataset):
    sequential = train(_config(epochs=1), tiny_spec, tiny_dataset)
    pipelined = train(_config(epochs=1, update_semantics="pipelined-stale"), tiny_spec, tiny_dataset)
    assert any(
        not np.array_equal(x, y) for x, y in zip(sequential.params.weights, pipelined.params.weights)
    )


def test_epoch_size_larger_than_dataset(tiny_spec, tiny_dataset):
    with pytest.raises(ConfigError):
        train(_config(epoch_size=65), tiny_spec, tiny_dataset)


def test_float_backend_run(tiny_spec, tiny_dataset):
    result = train(_config(backend="float", epochs=1), tiny_spec, tiny_dataset)
    assert result.clip_count == 0
    assert result.params.weights[0].dtype == np.float64


@pytest.mark.slow
@pytest.mark.parametrize("backend, floor", [("float", 60.0), ("fixed", 50.0)])
def test_baseline_network_learns_synthetic_digits(backend, floor):
    dataset = synthetic_dataset(600, seed=0)
    config = TrainConfig(
        epochs=3, epoch_size=600, rolling_window=200, log_every=200, backend=backend, progress=False
    )
    result = train(config, BASELINE_NETWORK, dataset)
    accuracies = [e.rolling_accuracy for e in result.epochs]
    assert accuracies[-1] > floor
    assert accuracies[-1] >= accuracies[0] - 5.0


def test_clip_statistics_of_zero_network(tiny_spec, tiny_dataset):
    config = _config(epochs=1)
    zeros = ParamStore([np.zeros(j.weights) for j in tiny_spec.junctions], [np.zeros(j.n_right) for j in tiny_spec.junctions])
    report = clip_statistics(tiny_spec, tiny_dataset, config, "sparse", window=32, params=zeros)
    assert report.clipped_fraction == 0.0
    assert report.n_values == 32 * 8
    assert report.bound == 8.0
    assert report.variance == 0.0
    assert sum(report.histogram) == report.n_values


def test_clip_statistics_after_training(tiny_spec, tiny_dataset):
    config = _config(epochs=1)
    sparse = clip_statistics(tiny_spec, tiny_dataset, config, "sparse", window=32, bins=16)
    fc = clip_statistics(tiny_spec, tiny_dataset, config, "fc", window=32, bins=16)
    assert sparse.densities == [0.25, 0.5]
    assert fc.densities == [1.0, 1.0]
    assert len(fc.histogram) == 16 and len(fc.bin_edges) == 17
    assert 0.0 <= sparse.clipped_fraction <= 1.0
    assert fc.max_abs >= 0.0


def test_clip_statistics_arguments(tiny_spec, tiny_dataset):
    config = _config(epochs=1)
    with pytest.raises(ConfigError):
        clip_statistics(tiny_spec, tiny_dataset, config, "dense")
    with pytest.raises(ConfigError):
        clip_statistics(tiny_spec, tiny_dataset, config, window=65)
