# app/classifiers/architectures.py
"""
Clasificadores multi-etiqueta pequeños.

Cuatro arquitecturas con número de parámetros distinto para conservar la
estructura fuente × objetivo de las matrices de transferencia:

    linear     aplanado -> densa(L)
    mlp        aplanado -> densa(128) -> ReLU -> densa(L)
    cnn_small  [conv3×3(8) -> ReLU -> pool2] -> [conv3×3(16) -> ReLU -> pool2] -> densa(L)
    cnn_wide   [conv3×3(16)] -> [conv3×3(32)] -> [conv3×3(32)], cada una con ReLU y pool2, -> densa(L)

Las convoluciones usan relleno 1 (misma resolución antes del pool).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Protocol, Tuple

import numpy as np

from app.core import ops
from app.core.tensor import Tensor, as_tensor
from app.errors import ShapeError

InitMode = Literal["random", "zeros"]


@dataclass(frozen=True)
class ArchitectureSpec:
    tag: str
    code: int  # byte de arquitectura en el checkpoint
    conv_channels: Tuple[int, ...] = ()
    hidden: Optional[int] = None

    @property
    def downsample(self) -> int:
        return 2 ** len(self.conv_channels)


ARCHITECTURES: Dict[str, ArchitectureSpec] = {
    "linear": ArchitectureSpec("linear", 0),
    "mlp": ArchitectureSpec("mlp", 1, hidden=128),
    "cnn_small": ArchitectureSpec("cnn_small", 2, conv_channels=(8, 16)),
    "cnn_wide": ArchitectureSpec("cnn_wide", 3, conv_channels=(16, 32, 32)),
}

ARCHITECTURE_BY_CODE: Dict[int, ArchitectureSpec] = {spec.code: spec for spec in ARCHITECTURES.values()}


class LogitModel(Protocol):
    """Cualquier cosa que mapee imágenes [N, 1, S, S] a logits [N, L]."""

    side: int
    num_labels: int

    def forward(self, images: Tensor, grad_params: bool = True) -> Tensor: ...


def parameter_shapes(spec: ArchitectureSpec, side: int, num_labels: int) -> List[Tuple[str, Tuple[int, ...]]]:
    """Nombres y formas de los parámetros, en el orden del checkpoint."""
    shapes: List[Tuple[str, Tuple[int, ...]]] = []
    channels = 1
    for i, out_channels in enumerate(spec.conv_channels):
        shapes.append((f"conv{i}.weight", (out_channels, channels, 3, 3)))
        shapes.append((f"conv{i}.bias", (out_channels,)))
        channels = out_channels
    features = channels * (side // spec.downsample) ** 2
    if spec.hidden is not None:
        shapes.append(("fc0.weight", (features, spec.hidden)))
        shapes.append(("fc0.bias", (spec.hidden,)))
        features = spec.hidden
    shapes.append(("out.weight", (features, num_labels)))
    shapes.append(("out.bias", (num_labels,)))
    return shapes


class Classifier:
    """
    Clasificador diferenciable: imágenes [N, 1, S, S] -> logits [N, L].

    La sigmoide nunca se aplica aquí; solo dentro de la pérdida o la métrica.
    """

    def __init__(self, architecture: str, params: Dict[str, Tensor], side: int, num_labels: int):
        if architecture not in ARCHITECTURES:
            raise ValueError(f"arquitectura desconocida: {architecture}")
        self.spec = ARCHITECTURES[architecture]
        self.architecture = architecture
        self.side = side
        self.num_labels = num_labels
        expected = parameter_shapes(self.spec, side, num_labels)
        for name, shape in expected:
            if name not in params or params[name].shape != shape:
                found = params[name].shape if name in params else None
                raise ShapeError(f"parámetro {name}", shape, found or ())
        self.params = {name: params[name] for name, _ in expected}

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def parameters(self) -> List[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def clone(self) -> "Classifier":
        copies = {name: Tensor(p.data.copy(), requires_grad=True) for name, p in self.params.items()}
        return Classifier(self.architecture, copies, self.side, self.num_labels)

    def forward(self, images: Tensor, grad_params: bool = True) -> Tensor:
        """
        Logits [N, L].

        Con `grad_params=False` los parámetros entran desacoplados: la cinta
        solo registra gradientes respecto a la entrada.
        """
        x = as_tensor(images)
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2] != self.side or x.shape[3] != self.side:
            raise ShapeError(f"forward_logits[{self.architecture}]", x.shape, (None, 1, self.side, self.side))
        p = self.params if grad_params else {k: v.detach() for k, v in self.params.items()}

        for i in range(len(self.spec.conv_channels)):
            x = ops.conv2d(x, p[f"conv{i}.weight"], p[f"conv{i}.bias"], padding=1)
            x = ops.max_pool2d(ops.relu(x))
        x = ops.reshape(x, (x.shape[0], -1))
        if self.spec.hidden is not None:
            x = ops.relu(ops.add(ops.matmul(x, p["fc0.weight"]), p["fc0.bias"]))
        return ops.add(ops.matmul(x, p["out.weight"]), p["out.bias"])

    __call__ = forward


def build_model(
    architecture: str,
    side: int = 32,
    num_labels: int = 6,
    seed: int = 0,
    init: InitMode = "random",
) -> Classifier:
    """Construye un clasificador con inicialización He (o ceros)."""
    if architecture not in ARCHITECTURES:
        raise ValueError(f"arquitectura desconocida: {architecture}")
    spec = ARCHITECTURES[architecture]
    if side % spec.downsample:
        raise ShapeError(f"build_model[{architecture}]", (side, side), (spec.downsample,))
    rng = np.random.default_rng(seed)
    params: Dict[str, Tensor] = {}
    for name, shape in parameter_shapes(spec, side, num_labels):
        if init == "zeros" or name.endswith(".bias"):
            values = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
            values = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        params[name] = Tensor(values, requires_grad=True)
    return Classifier(architecture, params, side, num_labels)


def forward_logits(model: LogitModel, images, grad_params: bool = True) -> Tensor:
    """Logits del modelo (o ensemble) para un lote de imágenes."""
    return model.forward(as_tensor(images), grad_params=grad_params)
