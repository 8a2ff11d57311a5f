"""sparsetrain - bit-accurate training of pre-defined sparse networks.

This package models a pipelined fixed-point training datapath:

- sparsetrain.fixedpoint: saturating fixed-point format and arithmetic
- sparsetrain.topology: sparse junctions and clash-free interleavers
- sparsetrain.engine: feedforward, backpropagation, update and training
- sparsetrain.pipeline: junction-pipelined schedule and memory-trace checks
- sparsetrain.resources: arithmetic-unit, memory and throughput estimates
- sparsetrain.data: MNIST ingestion and encoding
- sparsetrain.models: serialized reports
- sparsetrain.common: logging and errors
"""

__version__ = "0.1.0"

from . import common, data, engine, fixedpoint, models, pipeline, resources, topology

__all__ = [
    "fixedpoint",
    "topology",
    "engine",
    "pipeline",
    "resources",
    "data",
    "models",
    "common",
]
