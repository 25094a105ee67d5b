# tests/conftest.py
"""Fixtures compartidas: datasets diminutos, modelos y un clasificador logístico de un píxel."""

import numpy as np
import pytest

from app.classifiers.architectures import ARCHITECTURES, build_model
from app.core import ops
from app.core.tensor import Tensor, as_tensor
from app.data.dataset import resolve_labels
from app.data.synthetic import generate_synthetic
from app.models.schemas import SyntheticConfig


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="Ejecuta las pruebas marcadas como slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="necesita --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


class PixelLogistic:
    """Modelo de un píxel y una etiqueta: logit = w·x + b."""

    side = 1
    num_labels = 1

    def __init__(self, w: float = 2.0, b: float = 0.0):
        self.w = Tensor(np.array([[w]]), requires_grad=True)
        self.b = Tensor(np.array([b]), requires_grad=True)

    def forward(self, images, grad_params: bool = True):
        x = as_tensor(images)
        w, b = (self.w, self.b) if grad_params else (self.w.detach(), self.b.detach())
        return ops.add(ops.matmul(ops.reshape(x, (x.shape[0], 1)), w), b)

    __call__ = forward


@pytest.fixture
def pixel_model():
    return PixelLogistic()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_raw_dataset():
    """48 imágenes 8×8 con 3 etiquetas, con inciertas sin resolver."""
    config = SyntheticConfig(n=48, side=8, num_labels=3, seed=5, uncertainty_rate=0.1, prevalence=0.5)
    return generate_synthetic(config)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_raw_dataset):
    return resolve_labels(tiny_raw_dataset)


@pytest.fixture
def tiny_models():
    """Las cuatro arquitecturas sin entrenar sobre entradas 8×8."""
    return {tag: build_model(tag, side=8, num_labels=3, seed=i) for i, tag in enumerate(sorted(ARCHITECTURES))}


@pytest.fixture
def tiny_cnn():
    return build_model("cnn_small", side=8, num_labels=3, seed=11)
