# app/core/losses.py
"""Pérdida de entropía cruzada binaria multi-etiqueta sobre logits."""

from __future__ import annotations

from typing import Literal, Union

import numpy as np
from scipy.special import expit

from app.core.tensor import Tensor, as_tensor, record
from app.errors import LabelError, ShapeError

Reduction = Literal["mean", "sum"]


def bce_loss(logits: Tensor, labels: Union[Tensor, np.ndarray], reduction: Reduction = "mean") -> Tensor:
    """
    BCE en forma estable: log(1 + e^l) - y·l, calculada con `logaddexp`.

    reduction="mean" promedia sobre lote y etiquetas. reduction="sum" suma
    sobre el lote la media por ejemplo sobre etiquetas, de modo que el
    gradiente de cada ejemplo no depende del tamaño del lote.
    """
    logits = as_tensor(logits)
    y = np.asarray(labels.data if isinstance(labels, Tensor) else labels, dtype=np.float64)
    if logits.ndim != 2 or y.shape != logits.shape:
        raise ShapeError("bce_loss", logits.shape, y.shape)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise LabelError("bce_loss: etiquetas fuera de {0, 1}; resolver las inciertas antes de la pérdida")

    l = logits.data
    elementwise = np.logaddexp(0.0, l) - y * l
    n, num_labels = l.shape
    if reduction == "mean":
        scale = 1.0 / (n * num_labels)
    elif reduction == "sum":
        scale = 1.0 / num_labels
    else:
        raise ValueError(f"reduction desconocida: {reduction}")
    value = np.asarray(elementwise.sum() * scale)

    def backward(g):
        return ((expit(l) - y) * (g * scale),)

    return record("bce_loss", (logits,), value, backward)
