# app/classifiers/ensemble.py
"""Ensemble en logits: l(x) = Σ ω_k l_k(x)."""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from app.classifiers.architectures import LogitModel
from app.core import ops
from app.core.tensor import Tensor, as_tensor
from app.errors import ShapeError


class EnsembleModel:
    """Combinación convexa de logits de K miembros con el mismo tamaño de entrada."""

    def __init__(self, members: Sequence[LogitModel], weights: Optional[Sequence[float]] = None):
        if not members:
            raise ValueError("el ensemble necesita al menos un miembro")
        weights = [1.0 / len(members)] * len(members) if weights is None else [float(w) for w in weights]
        if len(weights) != len(members):
            raise ValueError("un peso por miembro")
        if any(w < 0 for w in weights):
            raise ValueError(f"pesos negativos: {weights}")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"los pesos deben sumar 1 (suman {sum(weights)!r})")
        sides = {m.side for m in members}
        labels = {m.num_labels for m in members}
        if len(sides) != 1 or len(labels) != 1:
            raise ShapeError("ensemble_logits", tuple(sorted(sides)), tuple(sorted(labels)))
        self.members: List[LogitModel] = list(members)
        self.weights: List[float] = weights
        self.side = sides.pop()
        self.num_labels = labels.pop()

    def forward(self, images: Tensor, grad_params: bool = True) -> Tensor:
        images = as_tensor(images)
        total = None
        for member, weight in zip(self.members, self.weights):
            term = ops.mul(member.forward(images, grad_params=grad_params), np.float64(weight))
            total = term if total is None else ops.add(total, term)
        return total

    __call__ = forward


def ensemble_logits(ensemble: EnsembleModel, images, grad_params: bool = True) -> Tensor:
    return ensemble.forward(as_tensor(images), grad_params=grad_params)
