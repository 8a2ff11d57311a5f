"""Training mathematics in float64 and saturating fixed-point backends."""

from .activations import ActivationId, ActivationTable, activate_real, build_activation_table
from .backends import Backend, BackendKind, FixedBackend, FloatBackend, make_backend
from .clipstats import clip_comparison, clip_statistics
from .params import NetState, ParamStore, glorot_sigma, init_params
from .propagation import (
    BpScaling,
    CostKind,
    SparseNet,
    backprop,
    bp_junction,
    compile_network,
    cost_delta,
    cost_value,
    evaluate,
    feedforward,
    ff_junction,
    pre_activations,
    predict,
    train_step,
    up_junction,
    update,
    weight_gradients,
)
from .training import (
    DEFAULT_LR_SCHEDULE,
    METRIC_COLUMNS,
    LrStep,
    TrainConfig,
    TrainResult,
    exponent_for,
    parse_lr_schedule,
    train,
)

__all__ = [
    "ActivationId",
    "ActivationTable",
    "activate_real",
    "build_activation_table",
    "Backend",
    "BackendKind",
    "FixedBackend",
    "FloatBackend",
    "make_backend",
    "clip_statistics",
    "clip_comparison",
    "NetState",
    "ParamStore",
    "glorot_sigma",
    "init_params",
    "BpScaling",
    "CostKind",
    "SparseNet",
    "compile_network",
    "feedforward",
    "ff_junction",
    "bp_junction",
    "up_junction",
    "pre_activations",
    "cost_delta",
    "cost_value",
    "backprop",
    "update",
    "weight_gradients",
    "train_step",
    "predict",
    "evaluate",
    "DEFAULT_LR_SCHEDULE",
    "METRIC_COLUMNS",
    "LrStep",
    "TrainConfig",
    "TrainResult",
    "exponent_for",
    "parse_lr_schedule",
    "train",
]
