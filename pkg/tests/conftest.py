from __future__ import annotations

import numpy as np
import pytest

from fakeatlas.adapters import MockEncoderAdapter
from fakeatlas.data import load_manifest, split_dataset
from fakeatlas.detector import DetectorModel, TrainConfig, train_detector
from fakeatlas.encoder import load_projection, random_projection, save_projection
from fakeatlas.synthetic import two_gaussian_corpus, write_image_corpus
from fakeatlas.util import orthonormal_rows


@pytest.fixture(scope="session")
def mock_adapter():
    return MockEncoderAdapter(seed=0)


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """40-image synthetic corpus (20 real / 20 fake, 64x64 PNGs)."""
    root = tmp_path_factory.mktemp("corpus-small")
    write_image_corpus(root, n_per_class=20, size=64, seed=0)
    return root


@pytest.fixture(scope="session")
def small_manifest(small_corpus_dir):
    return split_dataset(load_manifest(small_corpus_dir, name="small"), seed=1)


@pytest.fixture(scope="session")
def projection_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("proj") / "projection.bin"
    save_projection(random_projection(seed=0), path)
    return path


@pytest.fixture(scope="session")
def projection(projection_file):
    return load_projection(projection_file)


@pytest.fixture(scope="session")
def toy_split():
    """Two-Gaussian embedding corpus split into train/val."""
    x, y = two_gaussian_corpus(n=2000, seed=42)
    n_train = 1600
    train = [(x[i], int(y[i])) for i in range(n_train)]
    val = [(x[i], int(y[i])) for i in range(n_train, len(y))]
    return train, val, x, y, n_train


@pytest.fixture(scope="session")
def toy_model(toy_split) -> DetectorModel:
    train, val, *_ = toy_split
    return train_detector(train, val, TrainConfig(max_epochs=5, patience=5), seed=7)


@pytest.fixture()
def hand_model() -> DetectorModel:
    """16x256 model with orthonormal distiller rows and a fixed head."""
    head = np.zeros(16, dtype=np.float32)
    head[0], head[1] = 3.0, 4.0
    return DetectorModel(W=orthonormal_rows(16, 256, seed=5), head_w=head, head_b=0.0)
