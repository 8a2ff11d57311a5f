import numpy as np
import pandas as pd
import pytest

from sparsetrain.common.errors import ScheduleError, TopologyError
from sparsetrain.pipeline import Access, MemoryBankModel, MemoryKind, Op, PortType, simulate_trace
from sparsetrain.topology import BASELINE_NETWORK, Interleaver, NetworkSpec, build_interleavers


def _trace(spec, n, seed=0, **kwargs):
    return simulate_trace(spec, build_interleavers(spec, seed), n, **kwargs)


@pytest.mark.slow
def test_baseline_pipeline_has_no_port_conflicts():
    result = _trace(BASELINE_NETWORK, 1000)
    assert result.report.block_cycles == 1000
    report = result.report
    assert report.clean
    assert report.violation_count == 0
    assert report.clocks_per_block_cycle == 34
    assert report.accesses_checked > 0
    assert report.first is None


def test_tiny_pipeline_is_clean_for_several_seeds(tiny_spec):
    for seed in range(5):
        assert _trace(tiny_spec, 30, seed).report.clean


def test_single_bank_network_is_clean():
    spec = NetworkSpec.from_degrees((2, 2), d_out=(1,), z=(1,))
    assert _trace(spec, 10).report.clean


def test_undersized_queues_collide():
    report = _trace(BASELINE_NETWORK, 10, queue_depths=[1, 1, 1]).report
    assert not report.clean
    assert report.violation_count > 0
    first = report.first
    assert first.memory in ("ACT", "ADOT")
    assert "single-port" in first.rule
    assert len(first.accesses) >= 2
    assert len(report.violations) <= 20


def test_clashing_interleaver_is_reported(tiny_spec):
    interleavers = build_interleavers(tiny_spec, 0)
    j = interleavers[0].junction
    bad = np.sort(interleavers[0].map)
    interleavers[0] = Interleaver(j, bad)
    report = simulate_trace(tiny_spec, interleavers, 6).report
    assert not report.interleavers_clash_free
    assert report.violation_count > 0
    assert not report.clean


def test_trace_keeps_first_block_cycles(tiny_spec):
    result = _trace(tiny_spec, 12, keep_block_cycles=3)
    assert len(result.trace.block_cycles) == 3
    records = result.trace.records()
    assert set(records["block_cycle"].tolist()) == {0, 1, 2}
    count, violations = result.trace.check()
    assert count == 0 and violations == []


def test_first_block_cycle_has_no_update_traffic(tiny_spec):
    records = _trace(tiny_spec, 1).trace.records()
    ops = set(records["op"].tolist())
    assert Op.UP not in ops and Op.BP not in ops
    assert Op.LOAD in ops and Op.FF in ops
    writes = records[(records["memory"] == MemoryKind.WEIGHT) & (records["access"] == Access.WRITE)]
    assert len(writes) == 0


def test_weight_memory_sees_one_read_and_one_write_per_clock():
    records = _trace(BASELINE_NETWORK, 6).trace.records()
    w = records[(records["memory"] == MemoryKind.WEIGHT) & (records["block_cycle"] == 5)]
    frame = pd.DataFrame({name: w[name] for name in ("clock", "layer", "bank", "access")})
    assert frame.groupby(["clock", "layer", "bank", "access"]).size().max() == 1
    assert set(frame["access"]) == {Access.READ, Access.WRITE}


def test_trace_export(tmp_path, tiny_spec):
    path = _trace(tiny_spec, 4).trace.export_csv(tmp_path / "trace.csv")
    frame = pd.read_csv(path)
    assert {"clock", "memory", "bank", "address", "access", "op"} <= set(frame.columns)
    assert set(frame["memory"]) <= {"WEIGHT", "ACT", "ADOT", "DELTA"}
    assert set(frame["access"]) == {"read", "write"}


def test_bank_model_of_baseline():
    model = MemoryBankModel.for_network(BASELINE_NETWORK)
    assert model.queue_depths == (6, 4, 2)
    w1 = model.memory(MemoryKind.WEIGHT, 1)
    assert (w1.banks, w1.words_per_bank, w1.port) == (128, 33, PortType.SIMPLE_DUAL)
    w2 = model.memory(MemoryKind.WEIGHT, 2)
    assert (w2.banks, w2.words_per_bank) == (32, 33)
    act1 = model.memory(MemoryKind.ACT, 1)
    assert (act1.banks, act1.slots, act1.words_per_bank, act1.port) == (32, 4, 2, PortType.SINGLE)
    delta2 = model.memory(MemoryKind.DELTA, 2)
    assert (delta2.banks, delta2.slots, delta2.port) == (32, 2, PortType.TRUE_DUAL)
    with pytest.raises(ScheduleError):
        model.memory(MemoryKind.ADOT, 0)
    bits = model.bits_by_kind(12)
    assert bits["weight"] == (128 + 32) * 33 * 12


def test_bad_arguments():
    interleavers = build_interleavers(BASELINE_NETWORK, 0)
    with pytest.raises(TopologyError):
        simulate_trace(BASELINE_NETWORK, interleavers[:1], 4)
    with pytest.raises(TopologyError):
        simulate_trace(BASELINE_NETWORK, interleavers[::-1], 4)
    with pytest.raises(ScheduleError):
        simulate_trace(BASELINE_NETWORK, interleavers, -1)
    with pytest.raises(ScheduleError):
        simulate_trace(BASELINE_NETWORK, interleavers, 4, queue_depths=[6, 4])
