"""Dynamic-range study of the first hidden layer's pre-activations.

Run under the float backend; a pre-activation is counted as clipped when its
magnitude reaches the format's integer range 2^b_n.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Optional

import numpy as np

from ..common.errors import ConfigError
from ..data import Dataset, encode_dataset
from ..models import ClipStatsReport
from ..topology import NetworkSpec, fully_connected_counterpart
from .backends import BackendKind
from .params import ParamStore
from .propagation import compile_network, pre_activations
from .training import TrainConfig, train

logger = logging.getLogger(__name__)

SPARSE = "sparse"
FULLY_CONNECTED = "fc"


def clip_statistics(
    spec: NetworkSpec,
    dataset: Dataset,
    config: TrainConfig,
    which: str = SPARSE,
    window: int = 1000,
    bound: Optional[float] = None,
    bins: int = 64,
    params: Optional[ParamStore] = None,
) -> ClipStatsReport:
    """Train under float64, then collect |s_1| over the last ``window`` epoch samples.

    ``which='fc'`` swaps in the fully connected network with the same layer sizes.
    Passing real-valued ``params`` skips training and measures them as given.
    """
    if which not in (SPARSE, FULLY_CONNECTED):
        raise ConfigError("clipstats.which", f"expected 'sparse' or 'fc', got '{which}'")
    if window < 1 or window > config.epoch_size:
        raise ConfigError("clipstats.window", f"window {window} outside [1, {config.epoch_size}]")
    if which == FULLY_CONNECTED:
        spec = fully_connected_counterpart(spec)
    float_config = replace(config, backend=BackendKind.FLOAT)
    if params is None:
        result = train(float_config, spec, dataset, equal_block_cycles=which == SPARSE)
        params, net = result.params, result.net
    else:
        net = compile_network(
            spec, float_config.make_backend(), config.interleaver_seed, equal_block_cycles=which == SPARSE
        )
    bound = float(2 ** config.fmt.integer_bits) if bound is None else float(bound)

    inputs, _, _ = encode_dataset(dataset, config.epoch_size, n_inputs=spec.layer_sizes[0])
    start = config.epoch_size - window
    magnitudes = np.concatenate(
        [
            np.abs(pre_activations(params, np.asarray(x, dtype=np.float64), net)[0])
            for x in inputs[start:]
        ]
    )
    counts, edges = np.histogram(magnitudes, bins=bins, range=(0.0, max(bound, float(magnitudes.max()))))
    report = ClipStatsReport(
        which=which,
        densities=list(net.spec.densities),
        epochs=config.epochs,
        window=window,
        bound=bound,
        n_values=int(magnitudes.size),
        clipped_fraction=float(np.mean(magnitudes >= bound)),
        mean_abs=float(magnitudes.mean()),
        variance=float(magnitudes.var(ddof=1)) if magnitudes.size > 1 else 0.0,
        max_abs=float(magnitudes.max()),
        histogram=counts.tolist(),
        bin_edges=edges.tolist(),
    )
    logger.info(f"{which}: {100 * report.clipped_fraction:.1f}% of {report.n_values} pre-activations clipped")
    return report


def clip_comparison(
    spec: NetworkSpec, dataset: Dataset, config: TrainConfig, window: int = 1000
) -> dict[str, ClipStatsReport]:
    return {
        which: clip_statistics(spec, dataset, config, which, window)
        for which in (SPARSE, FULLY_CONNECTED)
    }
