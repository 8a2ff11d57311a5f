import pathlib
import sys

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
sys.path.append(str(ROOT))

from sparsetrain.data import save_idx, synthetic_dataset
from sparsetrain.topology import NetworkSpec

# 16-8-16 with one block cycle of 8 clocks; inputs are 4x4 images.
TINY_NETWORK = NetworkSpec.from_degrees((16, 8, 16), d_out=(2, 8), z=(4, 8))

TINY_OVERRIDES = [
    "network.layer_sizes=[16, 8, 16]",
    "network.d_out=[2, 8]",
    "network.z=[4, 8]",
    "training.epochs=1",
    "training.epoch_size=64",
    "training.rolling_window=32",
    "training.log_every=16",
    "training.progress=false",
    "clipstats.window=32",
    "trace.block_cycles=20",
]


@pytest.fixture(autouse=True)
def _log_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SPARSETRAIN_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.delenv("SPARSETRAIN_DATA_DIR", raising=False)


@pytest.fixture
def tiny_spec():
    return TINY_NETWORK


@pytest.fixture
def tiny_dataset():
    return synthetic_dataset(64, seed=3, rows=4, cols=4)


@pytest.fixture
def idx_dir(tmp_path, tiny_dataset):
    """Train and test IDX files of the tiny synthetic dataset."""
    root = tmp_path / "mnist"
    images = tiny_dataset.images.reshape(len(tiny_dataset), 4, 4)
    for prefix in ("train", "t10k"):
        save_idx(root / f"{prefix}-images-idx3-ubyte", images)
        save_idx(root / f"{prefix}-labels-idx1-ubyte", tiny_dataset.labels)
    return root


@pytest.fixture
def tiny_overrides(idx_dir, tmp_path):
    return TINY_OVERRIDES + [f"data.dir={idx_dir}", f"output.dir={tmp_path / 'runs'}"]


def dense_matrix(ilv, w):
    """(N_right, N_left) matrix with the slot weights scattered onto their edges."""
    j = ilv.junction
    m = np.zeros((j.n_right, j.n_left))
    np.add.at(m, (ilv.right_of_slot, ilv.map), w)
    return m
