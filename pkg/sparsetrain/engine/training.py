"""Training loop: learning-rate schedule, rolling metrics, update semantics."""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..common.errors import ConfigError, EngineError
from ..data import Dataset, encode_dataset
from ..fixedpoint import FixedFormat
from ..models import EpochSummary
from ..pipeline.schedule import (
    ParamHistory,
    UpdateSemantics,
    pipeline_fill_cycles,
    schedule_at,
    stale_update_view,
)
from ..topology import NetworkSpec
from .activations import ActivationId
from .backends import Backend, BackendKind, make_backend
from .params import NetState, ParamStore, init_params
from .propagation import (
    BpScaling,
    CostKind,
    SparseNet,
    bp_junction,
    compile_network,
    cost_delta,
    ff_junction,
    predict,
    train_step,
    up_junction,
)

logger = logging.getLogger(__name__)

METRIC_COLUMNS = [
    "epoch",
    "sample_index",
    "rolling_accuracy",
    "eta_exponent",
    "max_abs_w",
    "max_abs_b",
    "max_abs_delta",
    "clip_count",
]


@dataclass(frozen=True)
class LrStep:
    """Epochs ``first``..``last`` (inclusive, ``None`` = open-ended) use eta = 2^-exponent."""

    first_epoch: int
    last_epoch: Optional[int]
    exponent: int

    def covers(self, epoch: int) -> bool:
        return self.first_epoch <= epoch and (self.last_epoch is None or epoch <= self.last_epoch)


DEFAULT_LR_SCHEDULE = (
    LrStep(1, 2, 3),
    LrStep(3, 6, 4),
    LrStep(7, 10, 5),
    LrStep(11, 14, 6),
    LrStep(15, None, 7),
)


def exponent_for(schedule: Sequence[LrStep], epoch: int) -> int:
    for step in schedule:
        if step.covers(epoch):
            return step.exponent
    raise ConfigError("training.lr_schedule", f"no learning rate for epoch {epoch}")


def parse_lr_schedule(rows: Sequence[Any]) -> tuple:
    """``[[first, last, exponent], ...]`` or dicts with those keys; ``last`` may be null."""
    steps = []
    for row in rows:
        if isinstance(row, dict):
            row = (row.get("first_epoch"), row.get("last_epoch"), row.get("exponent"))
        try:
            first, last, exponent = row
            steps.append(LrStep(int(first), None if last is None else int(last), int(exponent)))
        except (TypeError, ValueError):
            raise ConfigError("training.lr_schedule", f"bad schedule row {row!r}") from None
        if exponent < 0:
            raise ConfigError("training.lr_schedule", f"negative exponent in {row!r}")
    return tuple(steps)


@dataclass
class TrainConfig:
    epochs: int = 15
    epoch_size: int = 12544
    lr_schedule: Sequence[LrStep] = DEFAULT_LR_SCHEDULE
    cost: CostKind = CostKind.CROSS_ENTROPY
    activation: ActivationId = ActivationId.SIGMOID
    backend: BackendKind = BackendKind.FIXED
    fmt: FixedFormat = field(default_factory=lambda: FixedFormat(12, 3, 8))
    init_seed: int = 0
    interleaver_seed: int = 0
    update_semantics: UpdateSemantics = UpdateSemantics.SEQUENTIAL
    bp_scaling: BpScaling = BpScaling.POST_SUM
    repeated_init: bool = True
    zero_bias_init: bool = False
    rolling_window: int = 1000
    log_every: int = 1000
    n_classes: int = 10
    progress: bool = True

    def __post_init__(self) -> None:
        for name, parse in (
            ("cost", CostKind),
            ("activation", ActivationId.parse),
            ("backend", BackendKind),
            ("update_semantics", UpdateSemantics),
            ("bp_scaling", BpScaling),
        ):
            try:
                setattr(self, name, parse(getattr(self, name)))
            except (ValueError, EngineError):
                raise ConfigError(f"training.{name}", f"unsupported value '{getattr(self, name)}'") from None
        if self.epochs < 0:
            raise ConfigError("training.epochs", "must be non-negative")
        if self.epoch_size < 1:
            raise ConfigError("training.epoch_size", "must be positive")
        if self.rolling_window < 1 or self.log_every < 1:
            raise ConfigError("training.rolling_window", "window and log interval must be positive")
        for epoch in range(1, self.epochs + 1):
            exponent_for(self.lr_schedule, epoch)

    def make_backend(self) -> Backend:
        return make_backend(self.backend, self.activation, self.fmt)

    def describe(self) -> Dict[str, Any]:
        return {
            "epochs": self.epochs,
            "epoch_size": self.epoch_size,
            "backend": self.backend.value,
            "format": str(self.fmt) if self.backend is BackendKind.FIXED else None,
            "activation": self.activation.value,
            "cost": self.cost.value,
            "update_semantics": self.update_semantics.value,
            "bp_scaling": self.bp_scaling.value,
        }


@dataclass
class TrainResult:
    metrics: pd.DataFrame
    epochs: List[EpochSummary]
    params: ParamStore
    initial_params: ParamStore
    net: SparseNet
    wall_time_s: float = 0.0

    @property
    def final_accuracy(self) -> Optional[float]:
        return self.epochs[-1].rolling_accuracy if self.epochs else None

    @property
    def clip_count(self) -> int:
        return self.net.backend.counter.count


class MetricsRecorder:
    """Rolling accuracy and value-range tracking, emitting metric rows."""

    def __init__(self, backend: Backend, window: int, log_every: int):
        self.backend = backend
        self.log_every = log_every
        self.hits: deque = deque(maxlen=window)
        self.rows: List[Dict[str, Any]] = []
        self.epochs: List[EpochSummary] = []
        self.epoch = 0
        self.eta_exponent = 0
        self.seen = 0
        self._reset_ranges()

    def _reset_ranges(self) -> None:
        self.max_w = self.max_b = self.max_delta = 0.0

    @property
    def rolling_accuracy(self) -> float:
        return 100.0 * sum(self.hits) / len(self.hits) if self.hits else 0.0

    def start_epoch(self, epoch: int, eta_exponent: int) -> None:
        self.epoch, self.eta_exponent, self.seen = epoch, eta_exponent, 0
        self._reset_ranges()

    def observe_deltas(self, deltas: Sequence[Optional[np.ndarray]]) -> None:
        for d in deltas:
            if d is not None:
                self.max_delta = max(self.max_delta, float(np.max(np.abs(self.backend.to_real(d)))))

    def observe_params(self, params: ParamStore) -> None:
        w, b = params.max_abs(self.backend)
        self.max_w, self.max_b = max(self.max_w, w), max(self.max_b, b)

    def observe_prediction(self, correct: bool) -> None:
        self.hits.append(bool(correct))
        self.seen += 1
        if self.seen % self.log_every == 0:
            self._emit()

    def _emit(self) -> None:
        self.rows.append(
            {
                "epoch": self.epoch,
                "sample_index": self.seen,
                "rolling_accuracy": self.rolling_accuracy,
                "eta_exponent": self.eta_exponent,
                "max_abs_w": self.max_w,
                "max_abs_b": self.max_b,
                "max_abs_delta": self.max_delta,
                "clip_count": self.backend.counter.count,
            }
        )

    def end_epoch(self) -> EpochSummary:
        if not self.rows or self.rows[-1]["epoch"] != self.epoch or self.rows[-1]["sample_index"] != self.seen:
            self._emit()
        summary = EpochSummary(**{k: v for k, v in self.rows[-1].items() if k != "sample_index"})
        self.epochs.append(summary)
        logger.info(
            f"Epoch {summary.epoch}: eta=2^-{summary.eta_exponent}, "
            f"rolling accuracy {summary.rolling_accuracy:.2f}%, clips {summary.clip_count}"
        )
        return summary

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=METRIC_COLUMNS)


class _EncodedStream:
    """Backend-ready inputs and targets for the first ``epoch_size`` samples."""

    def __init__(self, dataset: Dataset, config: TrainConfig, net: SparseNet):
        inputs, targets, labels = encode_dataset(
            dataset, config.epoch_size, n_inputs=net.spec.layer_sizes[0], n_outputs=net.spec.layer_sizes[-1]
        )
        self.backend = net.backend
        self.inputs = inputs
        self.targets = net.backend.from_real(targets)
        self.labels = labels

    def __len__(self) -> int:
        return len(self.labels)

    def input(self, index: int) -> np.ndarray:
        return self.backend.from_real(self.inputs[index])


def _train_sequential(
    config: TrainConfig, net: SparseNet, params: ParamStore, stream: _EncodedStream, rec: MetricsRecorder
) -> None:
    epochs = range(1, config.epochs + 1)
    for epoch in tqdm(epochs, desc="epochs", disable=not config.progress):
        e = exponent_for(config.lr_schedule, epoch)
        rec.start_epoch(epoch, e)
        for index in range(len(stream)):
            state = train_step(
                params,
                stream.input(index),
                stream.targets[index],
                net,
                e,
                config.cost,
                config.bp_scaling,
                sample_id=index,
            )
            rec.observe_deltas(state.deltas)
            rec.observe_params(params)
            rec.observe_prediction(predict(state.output, config.n_classes) == stream.labels[index])
        rec.end_epoch()


def _train_pipelined(
    config: TrainConfig, net: SparseNet, params: ParamStore, stream: _EncodedStream, rec: MetricsRecorder
) -> None:
    """Every junction works on a different sample each block cycle.

    FF and BP read the parameters as they stood at the end of the previous
    block cycle; UP results are committed when the block cycle ends.
    """
    L, E = net.num_junctions, len(stream)
    total = config.epochs * E
    history: ParamHistory[ParamStore] = ParamHistory(params.snapshot(), depth=1)
    inflight: Dict[int, NetState] = {}
    last_cycle = total + pipeline_fill_cycles(L)
    for t in tqdm(range(last_cycle), desc="block cycles", disable=not config.progress, mininterval=1.0):
        slot = schedule_at(t, L)
        for i in range(1, L + 1):
            w_view, b_view = stale_update_view(history, t, i)
            n = slot.ff(i)
            if slot.active(n, total):
                state = inflight.get(n)
                if state is None:
                    state = NetState([stream.input(n % E)], [net.backend.zeros(net.spec.layer_sizes[0])], [], n)
                    inflight[n] = state
                _, a, da = ff_junction(net, i, w_view, b_view, state.activations[-1])
                state.activations.append(a)
                state.derivatives.append(da)
                if i == L:
                    index = n % E
                    if index == 0:
                        epoch = n // E + 1
                        rec.start_epoch(epoch, exponent_for(config.lr_schedule, epoch))
                    state.deltas = [None] * (L + 1)
                    state.deltas[L] = cost_delta(a, stream.targets[index], config.cost, da, net.backend)
                    rec.observe_prediction(predict(a, config.n_classes) == stream.labels[index])
                    if index == E - 1:
                        rec.end_epoch()
            u = slot.up(i)
            if slot.active(u, total):
                state = inflight[u]
                delta = state.require_delta(i)
                if i >= 2:
                    state.deltas[i - 1] = bp_junction(
                        net, i, w_view, delta, state.derivatives[i - 1], config.bp_scaling
                    )
                    rec.observe_deltas([state.deltas[i - 1]])
                else:
                    rec.observe_deltas([delta])
                e = exponent_for(config.lr_schedule, u // E + 1)
                w, b = up_junction(net, i, w_view, b_view, state.activations[i - 1], delta, e)
                params.set_junction(i, w, b)
                if i == 1:
                    del inflight[u]
        history.commit(t, params.snapshot())
        rec.observe_params(params)


def train(
    config: TrainConfig,
    spec: NetworkSpec,
    dataset: Dataset,
    equal_block_cycles: bool = True,
) -> TrainResult:
    started = time.perf_counter()
    net = compile_network(spec, config.make_backend(), config.interleaver_seed, equal_block_cycles)
    params = init_params(net.spec, config.init_seed, net.backend, config.repeated_init, config.zero_bias_init)
    initial = params.copy()
    rec = MetricsRecorder(net.backend, config.rolling_window, config.log_every)
    if config.epochs > 0:
        stream = _EncodedStream(dataset, config, net)
        logger.info(
            f"Training {config.epochs} epochs of {len(stream)} samples, "
            f"{net.backend.describe()}, {config.update_semantics.value}"
        )
        if config.update_semantics is UpdateSemantics.PIPELINED_STALE:
            _train_pipelined(config, net, params, stream, rec)
        else:
            _train_sequential(config, net, params, stream, rec)
    return TrainResult(rec.frame(), rec.epochs, params, initial, net, time.perf_counter() - started)
