"""Feedforward, backpropagation and update over interleaved sparse junctions.

Weights are stored in right-sequential slot order: slots ``[j*d_in, (j+1)*d_in)``
feed right neuron ``j`` and the interleaver names the left neuron of each slot.
FF sums a right neuron's products with an adder tree and adds the bias last.
BP sums each left neuron's fan-out sequentially in ascending slot order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..common.errors import EngineError
from ..topology import Interleaver, NetworkSpec, build_interleavers, build_network
from .backends import Backend
from .params import NetState, ParamStore


class CostKind(str, Enum):
    CROSS_ENTROPY = "cross-entropy"
    QUADRATIC = "quadratic"


class BpScaling(str, Enum):
    POST_SUM = "post_sum"
    PER_EDGE = "per_edge"


@dataclass(frozen=True, eq=False)
class SparseNet:
    """A validated network with its interleavers and arithmetic backend."""

    spec: NetworkSpec
    interleavers: Tuple[Interleaver, ...]
    backend: Backend

    @property
    def num_junctions(self) -> int:
        return self.spec.num_junctions

    def interleaver(self, i: int) -> Interleaver:
        return self.interleavers[i - 1]


def compile_network(
    spec: NetworkSpec,
    backend: Backend,
    interleaver_seed: int = 0,
    equal_block_cycles: bool = True,
) -> SparseNet:
    spec = build_network(spec, equal_block_cycles=equal_block_cycles)
    return SparseNet(spec, tuple(build_interleavers(spec, interleaver_seed)), backend)


def _check_length(name: str, v: np.ndarray, n: int) -> None:
    if len(v) != n:
        raise EngineError(f"{name} has length {len(v)}, expected {n}")


def ff_junction(
    net: SparseNet, i: int, w: np.ndarray, b: np.ndarray, a_left: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One junction's FF; returns (pre-activation, activation, derivative)."""
    B, ilv = net.backend, net.interleaver(i)
    j = ilv.junction
    products = B.mul(w, a_left[ilv.map])
    s = B.add(B.tree_sum(products.reshape(j.n_right, j.d_in)), b)
    a, da = B.activate(s)
    return s, a, da


def bp_junction(
    net: SparseNet,
    i: int,
    w: np.ndarray,
    delta_right: np.ndarray,
    da_left: np.ndarray,
    scaling: BpScaling = BpScaling.POST_SUM,
) -> np.ndarray:
    """Delta of layer ``i - 1`` from junction ``i``'s weights and layer ``i`` delta."""
    B, ilv = net.backend, net.interleaver(i)
    terms = B.mul(w, delta_right[ilv.right_of_slot])
    if scaling is BpScaling.PER_EDGE:
        terms = B.mul(da_left[ilv.map], terms)
    acc = B.sequential_sum(terms[ilv.fanout_slots])
    if scaling is BpScaling.PER_EDGE:
        return acc
    return B.mul(da_left, acc)


def up_junction(
    net: SparseNet,
    i: int,
    w: np.ndarray,
    b: np.ndarray,
    a_left: np.ndarray,
    delta_right: np.ndarray,
    eta_exponent: int,
) -> Tuple[np.ndarray, np.ndarray]:
    B, ilv = net.backend, net.interleaver(i)
    b = B.sub(b, B.shift(delta_right, eta_exponent))
    grad = B.mul(a_left[ilv.map], delta_right[ilv.right_of_slot])
    w = B.sub(w, B.shift(grad, eta_exponent))
    return w, b


def feedforward(params: ParamStore, a0: np.ndarray, net: SparseNet, sample_id: int = -1) -> NetState:
    _check_length("input", a0, net.spec.layer_sizes[0])
    activations, derivatives = [a0], [net.backend.zeros(len(a0))]
    for i in range(1, net.num_junctions + 1):
        w, b = params.junction(i)
        _, a, da = ff_junction(net, i, w, b, activations[-1])
        activations.append(a)
        derivatives.append(da)
    return NetState(activations, derivatives, [None] * len(activations), sample_id)


def pre_activations(params: ParamStore, a0: np.ndarray, net: SparseNet) -> List[np.ndarray]:
    """Pre-activation of every non-input layer for one input."""
    _check_length("input", a0, net.spec.layer_sizes[0])
    a, out = a0, []
    for i in range(1, net.num_junctions + 1):
        w, b = params.junction(i)
        s, a, _ = ff_junction(net, i, w, b, a)
        out.append(s)
    return out


def cost_delta(
    a_out: np.ndarray,
    y: np.ndarray,
    cost: Union[str, CostKind],
    da_out: Optional[np.ndarray],
    backend: Backend,
) -> np.ndarray:
    _check_length("target", y, len(a_out))
    diff = backend.sub(a_out, y)
    if CostKind(cost) is CostKind.CROSS_ENTROPY:
        return diff
    if da_out is None:
        raise EngineError("quadratic cost needs the output derivative")
    _check_length("output derivative", da_out, len(a_out))
    return backend.mul(diff, da_out)


def cost_value(a_out: np.ndarray, y: np.ndarray, cost: Union[str, CostKind]) -> float:
    """Scalar cost of real-valued outputs."""
    a_out, y = np.asarray(a_out, dtype=np.float64), np.asarray(y, dtype=np.float64)
    _check_length("target", y, len(a_out))
    if CostKind(cost) is CostKind.QUADRATIC:
        return 0.5 * float(np.sum((a_out - y) ** 2))
    a = np.clip(a_out, 1e-300, 1.0 - 1e-16)
    return float(-np.sum(y * np.log(a) + (1.0 - y) * np.log1p(-a)))


def backprop(
    params: ParamStore,
    state: NetState,
    net: SparseNet,
    scaling: Union[str, BpScaling] = BpScaling.POST_SUM,
) -> List[np.ndarray]:
    """Fill ``state.deltas`` for layers L-1..1; returns them in that order.

    Junction 1 produces no delta for the input layer.
    """
    scaling = BpScaling(scaling)
    L = net.num_junctions
    if state.num_layers != L + 1:
        raise EngineError(f"state holds {state.num_layers} layers, network has {L + 1}")
    state.require_delta(L)
    out = []
    for i in range(L, 1, -1):
        w, _ = params.junction(i)
        delta = bp_junction(net, i, w, state.deltas[i], state.derivatives[i - 1], scaling)
        state.deltas[i - 1] = delta
        out.append(delta)
    return out


def update(params: ParamStore, state: NetState, net: SparseNet, eta_exponent: int) -> ParamStore:
    """Apply one sample's update to every junction; returns ``params``."""
    for i in range(1, net.num_junctions + 1):
        w, b = params.junction(i)
        w, b = up_junction(net, i, w, b, state.activations[i - 1], state.require_delta(i), eta_exponent)
        params.set_junction(i, w, b)
    return params


def weight_gradients(
    state: NetState, net: SparseNet
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """dC/dw (slot order) and dC/db per junction, in real units."""
    B = net.backend
    grads = []
    for i in range(1, net.num_junctions + 1):
        ilv = net.interleaver(i)
        a_left = B.to_real(state.activations[i - 1])
        delta = B.to_real(state.require_delta(i))
        grads.append((a_left[ilv.map] * delta[ilv.right_of_slot], delta.copy()))
    return grads


def train_step(
    params: ParamStore,
    a0: np.ndarray,
    y: np.ndarray,
    net: SparseNet,
    eta_exponent: int,
    cost: Union[str, CostKind] = CostKind.CROSS_ENTROPY,
    scaling: Union[str, BpScaling] = BpScaling.POST_SUM,
    sample_id: int = -1,
) -> NetState:
    """FF, cost, BP and UP for one sample with immediately visible updates."""
    state = feedforward(params, a0, net, sample_id)
    L = net.num_junctions
    state.deltas[L] = cost_delta(state.output, y, cost, state.derivatives[L], net.backend)
    backprop(params, state, net, scaling)
    update(params, state, net, eta_exponent)
    return state


def predict(output: np.ndarray, n_classes: int = 10) -> int:
    return int(np.argmax(output[:n_classes]))


def evaluate(
    params: ParamStore,
    net: SparseNet,
    inputs: Sequence[np.ndarray],
    labels: Sequence[int],
    n_classes: int = 10,
) -> float:
    """Inference-only accuracy in percent."""
    if len(inputs) != len(labels):
        raise EngineError(f"{len(inputs)} inputs but {len(labels)} labels")
    if len(labels) == 0:
        return 0.0
    correct = 0
    for x, label in zip(inputs, labels):
        state = feedforward(params, net.backend.from_real(x), net)
        correct += predict(state.output, n_classes) == int(label)
    return 100.0 * correct / len(labels)
