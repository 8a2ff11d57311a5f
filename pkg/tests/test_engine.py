import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import dense_matrix
from sparsetrain.common.errors import EngineError
from sparsetrain.engine import (
    ActivationId,
    BpScaling,
    CostKind,
    FixedBackend,
    FloatBackend,
    NetState,
    ParamStore,
    backprop,
    bp_junction,
    build_activation_table,
    compile_network,
    cost_delta,
    cost_value,
    evaluate,
    feedforward,
    glorot_sigma,
    init_params,
    make_backend,
    predict,
    train_step,
    up_junction,
    update,
    weight_gradients,
)
from sparsetrain.fixedpoint import FixedFormat
from sparsetrain.topology import BASELINE_NETWORK, NetworkSpec, build_network

Q = FixedFormat(12, 3, 8)


def _random_params(net, rng, scale=0.5):
    weights = [rng.normal(0, scale, j.weights) for j in net.spec.junctions]
    biases = [rng.normal(0, scale, j.n_right) for j in net.spec.junctions]
    return ParamStore(weights, biases)


def test_activation_table_sigmoid():
    table = build_activation_table("sigmoid", Q)
    assert table.size == 4096
    value, derivative = table.lookup(np.array([0, -2048]))
    assert value.tolist() == [128, 0]
    assert derivative[0] * Q.lsb == 0.25
    frame = table.to_frame()
    row = frame[frame.input_raw == 0].iloc[0]
    assert row.value == 0.5
    assert row.derivative == 0.25


def test_activation_table_relu_clip():
    table = build_activation_table(ActivationId.RELU_CLIP1, Q)
    value, derivative = table.lookup(np.array([-256, 128, 512]))
    assert (value * Q.lsb).tolist() == [0.0, 0.5, 1.0]
    assert (derivative * Q.lsb).tolist() == [0.0, 1.0, 0.0]


def test_unknown_activation():
    with pytest.raises(EngineError):
        build_activation_table("tanh", Q)


def test_fixed_backend_without_table_matches_table():
    wide = FixedBackend(FixedFormat(24, 7, 16))
    assert wide.table is None
    a, da = wide.activate(np.array([0]))
    assert a[0] * wide.fmt.lsb == 0.5
    assert da[0] * wide.fmt.lsb == 0.25


def test_all_zero_params_give_half_activations(tiny_spec):
    for backend in (FloatBackend(), FixedBackend(Q)):
        net = compile_network(tiny_spec, backend)
        params = ParamStore(
            [backend.zeros(j.weights) for j in tiny_spec.junctions],
            [backend.zeros(j.n_right) for j in tiny_spec.junctions],
        )
        state = feedforward(params, backend.from_real(np.linspace(0, 1, 16)), net)
        for a, da in zip(state.activations[1:], state.derivatives[1:]):
            assert np.all(backend.to_real(a) == 0.5)
            assert np.all(backend.to_real(da) == 0.25)


def test_single_junction_feedforward():
    spec = NetworkSpec.from_degrees((2, 1), d_out=(1,), z=(2,))
    net = compile_network(spec, FloatBackend())
    params = ParamStore([np.array([1.0, 1.0])], [np.array([0.0])])
    state = feedforward(params, np.array([0.5, 0.5]), net)
    assert state.output[0] == pytest.approx(1.0 / (1.0 + np.exp(-1.0)))


def test_fixed_matches_float_when_exact():
    spec = NetworkSpec.from_degrees((2, 1), d_out=(1,), z=(2,))
    float_net = compile_network(spec, FloatBackend("relu_clip8"))
    fixed_net = compile_network(spec, FixedBackend(Q, "relu_clip8"))
    w, b, a0 = np.array([1.5, -0.25]), np.array([0.125]), np.array([2.0, 1.0])
    expected = feedforward(ParamStore([w], [b]), a0, float_net).output
    B = fixed_net.backend
    got = feedforward(ParamStore([B.from_real(w)], [B.from_real(b)]), B.from_real(a0), fixed_net).output
    assert B.to_real(got).tolist() == expected.tolist() == [2.875]


def test_feedforward_matches_dense_reference(tiny_spec):
    rng = np.random.default_rng(0)
    net = compile_network(tiny_spec, FloatBackend(), interleaver_seed=3)
    params = _random_params(net, rng)
    a0 = rng.random(16)
    state = feedforward(params, a0, net)
    a = a0
    for i in range(1, 3):
        w, b = params.junction(i)
        s = dense_matrix(net.interleaver(i), w) @ a + b
        a = 1.0 / (1.0 + np.exp(-s))
        np.testing.assert_allclose(state.activations[i], a, rtol=0, atol=1e-12)


def test_backprop_matches_dense_transpose(tiny_spec):
    rng = np.random.default_rng(1)
    net = compile_network(tiny_spec, FloatBackend(), interleaver_seed=5)
    params = _random_params(net, rng)
    state = feedforward(params, rng.random(16), net)
    state.deltas[2] = rng.normal(0, 1, 16)
    for scaling in BpScaling:
        (delta_1,) = backprop(params, state, net, scaling)
        w2, _ = params.junction(2)
        expected = state.derivatives[1] * (dense_matrix(net.interleaver(2), w2).T @ state.deltas[2])
        np.testing.assert_allclose(delta_1, expected, rtol=0, atol=1e-12)


@st.composite
def small_networks(draw):
    """Valid power-of-two networks of 1 to 3 junctions with 2 to 16 neurons per layer."""
    L = draw(st.integers(1, 3))
    exps = draw(st.lists(st.integers(1, 4), min_size=L + 1, max_size=L + 1))
    block = draw(st.integers(0, min(exps[1:])))
    d_out, z = [], []
    for i in range(1, L + 1):
        low = max(0, exps[i] - exps[i - 1])
        assume(low <= block)
        k = draw(st.integers(low, block))
        d_out.append(2**k)
        z.append(2 ** (exps[i - 1] + k - block))
    return build_network(NetworkSpec.from_degrees([2**e for e in exps], d_out=d_out, z=z))


def _dense_feedforward(net, params, a0):
    acts, ders = [a0], [None]
    for i in range(1, net.num_junctions + 1):
        w, b = params.junction(i)
        a = 1.0 / (1.0 + np.exp(-(dense_matrix(net.interleaver(i), w) @ acts[-1] + b)))
        acts.append(a)
        ders.append(a * (1.0 - a))
    return acts, ders


@settings(max_examples=25, deadline=None)
@given(spec=small_networks(), seed=st.integers(0, 2**16))
def test_float_engine_matches_dense_reference(spec, seed):
    rng = np.random.default_rng(seed)
    net = compile_network(spec, FloatBackend(), interleaver_seed=seed)
    params = _random_params(net, rng)
    L = spec.num_junctions
    a0 = rng.random(spec.layer_sizes[0])

    state = feedforward(params, a0, net)
    acts, ders = _dense_feedforward(net, params, a0)
    for i in range(1, L + 1):
        np.testing.assert_allclose(state.activations[i], acts[i], rtol=0, atol=1e-12)
        np.testing.assert_allclose(state.derivatives[i], ders[i], rtol=0, atol=1e-12)

    deltas = {L: rng.normal(0, 1, spec.layer_sizes[-1])}
    for i in range(L, 1, -1):
        w, _ = params.junction(i)
        deltas[i - 1] = ders[i - 1] * (dense_matrix(net.interleaver(i), w).T @ deltas[i])
    state.deltas[L] = deltas[L]
    for scaling in BpScaling:
        backprop(params, state, net, scaling)
        for i in range(1, L):
            np.testing.assert_allclose(state.deltas[i], deltas[i], rtol=0, atol=1e-12)

    e = 3
    expected = []
    for i in range(1, L + 1):
        ilv = net.interleaver(i)
        w, b = params.junction(i)
        step = 2.0**-e * ilv.dense_mask() * np.outer(deltas[i], acts[i - 1])
        expected.append((dense_matrix(ilv, w) - step, b - 2.0**-e * deltas[i]))
    update(params, state, net, e)
    for i, (dense_w, b) in enumerate(expected, start=1):
        w_new, b_new = params.junction(i)
        np.testing.assert_allclose(dense_matrix(net.interleaver(i), w_new), dense_w, rtol=0, atol=1e-12)
        np.testing.assert_allclose(b_new, b, rtol=0, atol=1e-12)


def test_backprop_hand_example():
    spec = NetworkSpec.from_degrees((2, 2, 1), d_out=(1, 1), z=(2, 2))
    for backend in (FloatBackend(), FixedBackend(Q)):
        net = compile_network(spec, backend)
        B = backend
        delta = bp_junction(
            net, 2, B.from_real([2.0, -1.0]), B.from_real([0.5]), B.from_real([0.25, 0.25])
        )
        assert B.to_real(delta).tolist() == [0.25, -0.125]


def test_zero_delta_propagates_zero(tiny_spec):
    net = compile_network(tiny_spec, FixedBackend(Q))
    params = init_params(tiny_spec, 0, net.backend)
    state = feedforward(params, net.backend.from_real(np.ones(16) / 2), net)
    state.deltas[2] = net.backend.zeros(16)
    (delta_1,) = backprop(params, state, net)
    assert not delta_1.any()
    before = params.copy()
    update(params, state, net, 3)
    for w0, w1 in zip(before.weights, params.weights):
        assert np.array_equal(w0, w1)


def test_backprop_needs_output_delta(tiny_spec):
    net = compile_network(tiny_spec, FloatBackend())
    params = init_params(tiny_spec, 0, net.backend)
    state = feedforward(params, np.zeros(16), net)
    with pytest.raises(EngineError):
        backprop(params, state, net)


def test_cost_delta():
    B = FloatBackend()
    a, y = np.array([0.9, 0.1]), np.array([1.0, 0.0])
    np.testing.assert_allclose(cost_delta(a, y, CostKind.CROSS_ENTROPY, None, B), [-0.1, 0.1])
    np.testing.assert_allclose(cost_delta(a, y, "quadratic", np.array([0.09, 0.09]), B), [-0.009, 0.009])
    assert not cost_delta(y, y, "cross-entropy", None, B).any()
    with pytest.raises(EngineError):
        cost_delta(a, y, "quadratic", None, B)
    with pytest.raises(EngineError):
        cost_delta(a, np.zeros(3), "cross-entropy", None, B)


def test_update_hand_example():
    spec = NetworkSpec.from_degrees((1, 1), d_out=(1,), z=(1,))
    for backend in (FloatBackend(), FixedBackend(Q)):
        net = compile_network(spec, backend)
        B = backend
        w, b = up_junction(net, 1, B.from_real([1.0]), B.from_real([0.0]), B.from_real([0.5]), B.from_real([0.5]), 3)
        assert B.to_real(w).tolist() == [0.96875]
        assert B.to_real(b).tolist() == [-0.0625]


@pytest.mark.parametrize("cost", list(CostKind))
def test_gradients_match_finite_differences(tiny_spec, cost):
    rng = np.random.default_rng(2)
    net = compile_network(tiny_spec, FloatBackend(), interleaver_seed=1)
    params = _random_params(net, rng)
    a0 = rng.random(16)
    y = np.zeros(16)
    y[3] = 1.0

    state = feedforward(params, a0, net)
    state.deltas[2] = cost_delta(state.output, y, cost, state.derivatives[2], net.backend)
    backprop(params, state, net)
    grads = weight_gradients(state, net)

    def numeric(kind, i, k, h=1e-5):
        plus, minus = params.copy(), params.copy()
        getattr(plus, kind)[i - 1][k] += h
        getattr(minus, kind)[i - 1][k] -= h
        return (
            cost_value(feedforward(plus, a0, net).output, y, cost)
            - cost_value(feedforward(minus, a0, net).output, y, cost)
        ) / (2 * h)

    checked = 0
    for i in (1, 2):
        j = tiny_spec.junction(i)
        for slot in range(j.weights):
            assert grads[i - 1][0][slot] == pytest.approx(numeric("weights", i, slot), rel=1e-4, abs=1e-7)
            checked += 1
        for r in range(j.n_right):
            assert grads[i - 1][1][r] == pytest.approx(numeric("biases", i, r), rel=1e-4, abs=1e-7)
            checked += 1
    assert checked >= 100


def test_train_step_moves_toward_target(tiny_spec):
    net = compile_network(tiny_spec, FloatBackend())
    params = init_params(tiny_spec, 0, net.backend)
    a0, y = np.linspace(0, 1, 16), np.eye(16)[2]
    before = cost_value(feedforward(params, a0, net).output, y, "cross-entropy")
    for _ in range(5):
        train_step(params, a0, y, net, 3)
    assert cost_value(feedforward(params, a0, net).output, y, "cross-entropy") < before


def test_glorot_init_ranges():
    backend = FloatBackend()
    params = init_params(BASELINE_NETWORK, 0, backend)
    for i, bound in ((1, 0.51), (2, 0.61)):
        w, b = params.junction(i)
        j = BASELINE_NETWORK.junction(i)
        assert len(np.unique(w)) <= 32
        assert set(np.unique(b)) <= set(np.unique(w))
        assert 3 * glorot_sigma(j.d_out, j.d_in) == pytest.approx(bound, abs=0.01)


def test_init_is_deterministic():
    backend = make_backend("fixed", fmt=Q)
    a = init_params(BASELINE_NETWORK, 4, backend)
    b = init_params(BASELINE_NETWORK, 4, backend)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    c = init_params(BASELINE_NETWORK, 4, backend, repeated=False, zero_bias=True)
    assert len(np.unique(c.weights[0])) > 32
    assert not c.biases[0].any()


def test_repeated_init_biases_cycle_through_block_values():
    params = init_params(BASELINE_NETWORK, 1, FloatBackend())
    for i in (1, 2):
        w, b = params.junction(i)
        j = BASELINE_NETWORK.junction(i)
        values = w[:: j.z]
        assert len(values) == j.block_length
        np.testing.assert_array_equal(b, values[np.arange(j.n_right) % j.block_length])
        assert len(np.unique(b)) == min(j.n_right, j.block_length)


def test_snapshot_is_not_affected_by_updates(tiny_spec):
    net = compile_network(tiny_spec, FixedBackend(Q))
    params = init_params(tiny_spec, 0, net.backend)
    snap = params.snapshot()
    w0 = snap.weights[0].copy()
    train_step(params, net.backend.from_real(np.ones(16) / 2), net.backend.from_real(np.eye(16)[1]), net, 3)
    assert np.array_equal(snap.weights[0], w0)
    assert not np.array_equal(params.weights[0], w0)


def test_state_requires_deltas():
    state = NetState([np.zeros(2)], [np.zeros(2)])
    with pytest.raises(EngineError):
        state.require_delta(1)


def test_predict_and_evaluate(tiny_spec):
    assert predict(np.array([0.1, 0.9] + [0.0] * 8 + [5.0] * 6)) == 1
    net = compile_network(tiny_spec, FloatBackend())
    params = init_params(tiny_spec, 0, net.backend)
    assert evaluate(params, net, [], []) == 0.0
    acc = evaluate(params, net, [np.zeros(16)] * 4, [0, 1, 2, 3])
    assert acc in (0.0, 25.0)
    with pytest.raises(EngineError):
        evaluate(params, net, [np.zeros(16)], [0, 1])
