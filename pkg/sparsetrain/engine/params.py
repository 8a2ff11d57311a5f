"""Parameter storage, per-sample state and initialization."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..common.errors import EngineError
from ..topology import NetworkSpec
from .backends import Backend, BackendKind

logger = logging.getLogger(__name__)


@dataclass
class ParamStore:
    """Weights (right-sequential slot order) and biases per junction.

    Arrays are replaced, never written in place, so a shallow copy is a
    consistent snapshot.
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @property
    def num_junctions(self) -> int:
        return len(self.weights)

    def junction(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.weights[i - 1], self.biases[i - 1]

    def set_junction(self, i: int, w: np.ndarray, b: np.ndarray) -> None:
        self.weights[i - 1] = w
        self.biases[i - 1] = b

    def snapshot(self) -> "ParamStore":
        return ParamStore(list(self.weights), list(self.biases))

    def copy(self) -> "ParamStore":
        return ParamStore([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def max_abs(self, backend: Backend) -> Tuple[float, float]:
        w = max(float(np.max(np.abs(backend.to_real(x)))) for x in self.weights)
        b = max(float(np.max(np.abs(backend.to_real(x)))) for x in self.biases)
        return w, b

    def save_npz(self, path: str | Path, backend: Backend) -> Path:
        arrays: Dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            arrays[f"w{i}"] = backend.to_real(w)
            arrays[f"b{i}"] = backend.to_real(b)
            if backend.kind is BackendKind.FIXED:
                arrays[f"w{i}_raw"] = w
                arrays[f"b{i}_raw"] = b
        path = Path(path)
        np.savez(path, **arrays)
        return path


@dataclass
class NetState:
    """Per-sample activations, derivatives and deltas, indexed by layer 0..L."""

    activations: List[np.ndarray]
    derivatives: List[np.ndarray]
    deltas: List[Optional[np.ndarray]] = field(default_factory=list)
    sample_id: int = -1

    @property
    def num_layers(self) -> int:
        return len(self.activations)

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]

    def require_delta(self, layer: int) -> np.ndarray:
        if layer >= len(self.deltas) or self.deltas[layer] is None:
            raise EngineError(f"delta of layer {layer} missing; run feedforward and cost_delta first")
        return self.deltas[layer]


def glorot_sigma(d_out: int, d_in: int) -> float:
    return math.sqrt(2.0 / (d_out + d_in))


def init_params(
    net: NetworkSpec,
    seed: int,
    backend: Backend,
    repeated: bool = True,
    zero_bias: bool = False,
) -> ParamStore:
    """Glorot-normal initialization with variance 2/(d_out + d_in).

    With ``repeated`` every bank's weight memory holds the same W/z values, so
    slot m takes value ``v[m // z]``. Biases draw from the same W/z values,
    bias j taking ``v[j % (W/z)]``, so neighbouring biases differ.
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i, j in enumerate(net.junctions, start=1):
        sigma = glorot_sigma(j.d_out, j.d_in)
        if repeated:
            values = rng.normal(0.0, sigma, size=j.block_length)
            w = values[np.arange(j.weights) // j.z]
            b = values[np.arange(j.n_right) % j.block_length]
        else:
            w = rng.normal(0.0, sigma, size=j.weights)
            b = rng.normal(0.0, sigma, size=j.n_right)
        if zero_bias:
            b = np.zeros(j.n_right)
        weights.append(backend.from_real(w))
        biases.append(backend.from_real(b))
        logger.debug(f"Junction {i}: sigma={sigma:.4f}, {len(np.unique(w))} distinct initial weights")
    return ParamStore(weights, biases)
